#include "mmms/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mmms/errors.hpp"
#include "mmms/hash.hpp"
#include "mmms/png_io.hpp"

namespace mmms {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path raster_path(const DatasetManifest& m, const std::string& dir, const std::string& id) {
  return m.root / dir / (id + ".png");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json manifest_json(const DatasetManifest& m) {
  json mods = json::array();
  for (const auto& mod : m.modalities) {
    mods.push_back({{"name", mod.name},
                    {"channels", mod.channels},
                    {"bit_depth", mod.bit_depth},
                    {"scale", mod.scale}});
  }
  return {{"images", m.images}, {"modalities", mods}, {"gt", m.gt_format}};
}

Raster load_raster(const DatasetManifest& m, const std::string& dir, const std::string& id,
                   const std::string& what) {
  const fs::path path = raster_path(m, dir, id);
  if (!fs::exists(path)) {
    throw DatasetError("image '" + id + "': missing " + what + " file " + path.string());
  }
  return read_png(path);
}

}  // namespace

const Tensor3* Sample::modality(const std::string& name) const {
  for (const auto& m : modalities) {
    if (m.name == name) return &m.tensor;
  }
  return nullptr;
}

DatasetManifest load_manifest(const fs::path& root) {
  const fs::path file = root / "manifest.json";
  if (!fs::exists(file)) throw DatasetError("no manifest.json under " + root.string());
  DatasetManifest m;
  m.root = root;
  try {
    const json j = json::parse(read_file(file));
    m.images = j.at("images").get<std::vector<std::string>>();
    if (j.contains("modalities")) {
      for (const auto& mod : j.at("modalities")) {
        ModalitySpec spec;
        spec.name = mod.at("name").get<std::string>();
        spec.channels = mod.value("channels", 1);
        spec.bit_depth = mod.value("bit_depth", 8);
        spec.scale = mod.value("scale", spec.bit_depth == 16 ? 65535.0 : 255.0);
        if (spec.channels != 1 && spec.channels != 3) {
          throw DatasetError("modality '" + spec.name + "': unsupported channel count");
        }
        if (spec.name == "rgb" || spec.name == "gt" || spec.name.empty() ||
            spec.name.find('/') != std::string::npos) {
          throw DatasetError("invalid modality name '" + spec.name + "'");
        }
        m.modalities.push_back(spec);
      }
    }
    m.gt_format = j.value("gt", std::string("joint_png"));
  } catch (const json::exception& e) {
    throw DatasetError("malformed manifest " + file.string() + ": " + e.what());
  }
  if (m.gt_format != "joint_png") {
    throw DatasetError("unsupported ground-truth format '" + m.gt_format + "'");
  }
  return m;
}

void save_manifest(const DatasetManifest& manifest) {
  fs::create_directories(manifest.root);
  std::ofstream out(manifest.root / "manifest.json", std::ios::binary);
  if (!out) throw DatasetError("cannot write manifest under " + manifest.root.string());
  out << manifest_json(manifest).dump(2) << "\n";
}

Relabeling relabel_contiguous(const std::vector<std::uint32_t>& raw) {
  std::vector<std::uint32_t> values;
  {
    std::vector<std::uint32_t> sorted = raw;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    values.push_back(0);
    for (std::uint32_t v : sorted) {
      if (v != 0) values.push_back(v);
    }
  }
  if (values.size() - 1 > 65535) {
    throw DatasetError("ground truth has " + std::to_string(values.size() - 1) +
                       " surfaces, more than 65535");
  }
  std::map<std::uint32_t, SurfaceLabel> index;
  for (std::size_t i = 0; i < values.size(); ++i) index[values[i]] = static_cast<SurfaceLabel>(i);
  Relabeling out;
  out.labels.reserve(raw.size());
  for (std::uint32_t v : raw) out.labels.push_back(index[v]);
  out.mapping = std::move(values);
  return out;
}

Sample load_sample(const DatasetManifest& manifest, const std::string& id) {
  if (std::find(manifest.images.begin(), manifest.images.end(), id) == manifest.images.end()) {
    throw DatasetError("image '" + id + "' not in manifest");
  }
  Sample s;
  s.id = id;

  const Raster rgb = load_raster(manifest, "rgb", id, "rgb");
  if (rgb.channels != 3 || rgb.bit_depth != 8) {
    throw DatasetError("image '" + id + "': rgb must be 8-bit RGB");
  }
  s.rgb = Tensor3(rgb.height, rgb.width, 3);
  for (std::size_t i = 0; i < rgb.samples.size(); ++i) s.rgb.data()[i] = rgb.samples[i] / 255.0f;

  for (const ModalitySpec& spec : manifest.modalities) {
    const Raster r = load_raster(manifest, spec.name, id, "modality '" + spec.name + "'");
    if (r.height != rgb.height || r.width != rgb.width) {
      throw DatasetError("image '" + id + "': modality '" + spec.name + "' is " +
                         std::to_string(r.height) + "x" + std::to_string(r.width) + ", rgb is " +
                         std::to_string(rgb.height) + "x" + std::to_string(rgb.width));
    }
    if (r.channels != spec.channels) {
      throw DatasetError("image '" + id + "': modality '" + spec.name + "' has " +
                         std::to_string(r.channels) + " channels, manifest declares " +
                         std::to_string(spec.channels));
    }
    Tensor3 t(r.height, r.width, r.channels);
    const auto scale = static_cast<float>(spec.scale);
    for (std::size_t i = 0; i < r.samples.size(); ++i) t.data()[i] = r.samples[i] / scale;
    s.modalities.push_back({spec.name, std::move(t)});
  }

  const Raster gt = load_raster(manifest, "gt", id, "ground-truth");
  if (gt.channels != 1) throw DatasetError("image '" + id + "': ground truth must be single-channel");
  if (gt.height != rgb.height || gt.width != rgb.width) {
    throw DatasetError("image '" + id + "': ground truth size differs from rgb");
  }
  const std::vector<std::uint32_t> raw(gt.samples.begin(), gt.samples.end());
  Relabeling rl = relabel_contiguous(raw);
  const int surfaces = static_cast<int>(rl.mapping.size()) - 1;
  s.gt_joint = JointMask(gt.height, gt.width, surfaces, std::move(rl.labels));
  s.label_mapping = std::move(rl.mapping);
  return s;
}

void write_sample(const DatasetManifest& manifest, const Sample& sample) {
  const int h = sample.height();
  const int w = sample.width();
  for (const char* dir : {"rgb", "gt"}) fs::create_directories(manifest.root / dir);

  Raster rgb{h, w, 3, 8, false, {}};
  rgb.samples.resize(sample.rgb.size());
  for (std::size_t i = 0; i < sample.rgb.size(); ++i) {
    const float v = std::clamp(sample.rgb.data()[i], 0.0f, 1.0f);
    rgb.samples[i] = static_cast<std::uint16_t>(std::lround(v * 255.0f));
  }
  write_png(raster_path(manifest, "rgb", sample.id), rgb);

  for (const ModalitySpec& spec : manifest.modalities) {
    const Tensor3* t = sample.modality(spec.name);
    if (t == nullptr) {
      throw DatasetError("image '" + sample.id + "': missing modality '" + spec.name + "'");
    }
    fs::create_directories(manifest.root / spec.name);
    Raster r{h, w, t->channels(), spec.bit_depth, false, {}};
    r.samples.resize(t->size());
    const double max_raw = spec.bit_depth == 16 ? 65535.0 : 255.0;
    for (std::size_t i = 0; i < t->size(); ++i) {
      const double v = std::clamp(static_cast<double>(t->data()[i]) * spec.scale, 0.0, max_raw);
      r.samples[i] = static_cast<std::uint16_t>(std::lround(v));
    }
    write_png(raster_path(manifest, spec.name, sample.id), r);
  }

  const int surfaces = sample.gt_joint.surface_count();
  Raster gt{h, w, 1, surfaces <= 255 ? 8 : 16, surfaces <= 255, {}};
  gt.samples.assign(sample.gt_joint.labels().begin(), sample.gt_joint.labels().end());
  write_png(raster_path(manifest, "gt", sample.id), gt);
}

std::uint64_t manifest_fingerprint(const DatasetManifest& manifest) {
  Fnv1a h;
  h.update(manifest_json(manifest).dump());
  for (const std::string& id : manifest.images) {
    const auto add = [&](const std::string& dir) {
      const fs::path p = raster_path(manifest, dir, id);
      if (fs::exists(p)) h.update(read_file(p));
    };
    add("rgb");
    add("gt");
    for (const auto& mod : manifest.modalities) add(mod.name);
  }
  return h.digest();
}

}  // namespace mmms
