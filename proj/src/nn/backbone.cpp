#include "mmms/nn/backbone.hpp"

#include <cmath>
#include <sstream>

#include "mmms/errors.hpp"
#include "mmms/nn/feature_archive.hpp"

namespace mmms::nn {
namespace {

// Fixed 2D sine/cosine position code: first half of the channels encodes the
// row, second half the column.
void add_position_code(Tensor3& x) {
  const int half = x.channels() / 2;
  for (int r = 0; r < x.height(); ++r) {
    for (int c = 0; c < x.width(); ++c) {
      float* p = x.pixel(r, c).data();
      for (int j = 0; j < x.channels(); ++j) {
        const int local = j < half ? j : j - half;
        const int width = j < half ? half : x.channels() - half;
        const double pos = j < half ? r : c;
        const double omega = std::pow(10000.0, -static_cast<double>(local / 2 * 2) / width);
        p[j] += static_cast<float>(local % 2 == 0 ? std::sin(pos * omega) : std::cos(pos * omega));
      }
    }
  }
}

}  // namespace

void validate(const BackboneFeatures& f) {
  if (f.patch < 1 || f.dim < 1) throw DimensionError("backbone features: invalid patch or dim");
  if (f.image_height % f.patch != 0 || f.image_width % f.patch != 0) {
    throw DimensionError("backbone features: image " + std::to_string(f.image_height) + "x" +
                         std::to_string(f.image_width) + " not divisible by patch " +
                         std::to_string(f.patch));
  }
  if (f.taps.size() != 4) {
    throw DimensionError("backbone features: expected 4 taps, got " + std::to_string(f.taps.size()));
  }
  for (const Tensor3& t : f.taps) {
    if (t.height() != f.image_height / f.patch || t.width() != f.image_width / f.patch ||
        t.channels() != f.dim) {
      throw DimensionError("backbone features: tap is " + std::to_string(t.height()) + "x" +
                           std::to_string(t.width()) + "x" + std::to_string(t.channels()));
    }
  }
}

std::vector<int> BackboneConfig::resolved_taps() const {
  std::vector<int> out = taps;
  if (out.empty()) {
    for (int i = 1; i <= 4; ++i) out.push_back(depth * i / 4);
  }
  if (out.size() != 4) throw ConfigError("backbone: exactly four taps are required");
  int last = 0;
  for (int t : out) {
    if (t <= last || t > depth) {
      throw ConfigError("backbone: taps must be increasing block indices in [1, depth]");
    }
    last = t;
  }
  return out;
}

StubBackbone::StubBackbone(BackboneConfig config) : config_(std::move(config)) {
  if (config_.patch < 1 || config_.dim < 4 || config_.dim % 4 != 0 || config_.depth < 4) {
    throw ConfigError("backbone: need patch >= 1, dim a multiple of 4, depth >= 4");
  }
  if (!(config_.mlp_ratio > 0.0)) throw ConfigError("backbone: mlp ratio must be positive");
  taps_ = config_.resolved_taps();
  const int heads = config_.heads > 0 ? config_.heads : default_heads(config_.dim);
  const int hidden = std::max(1, static_cast<int>(std::lround(config_.dim * config_.mlp_ratio)));
  Init init(config_.seed);
  patchify_ = Conv2d::make(3, config_.dim, config_.patch, config_.patch, 0, init);
  for (int b = 0; b < config_.depth; ++b) {
    blocks_.push_back({LayerNorm::make(config_.dim), Attention::make(config_.dim, heads, 1, init),
                       LayerNorm::make(config_.dim), Mlp::make(config_.dim, hidden, init)});
  }
}

std::string StubBackbone::describe() const {
  std::ostringstream ss;
  ss << "stub(seed=" << config_.seed << ",patch=" << config_.patch << ",dim=" << config_.dim
     << ",depth=" << config_.depth << ",mlp=" << config_.mlp_ratio << ")";
  return ss.str();
}

BackboneFeatures StubBackbone::forward(const Tensor3& rgb) const {
  if (rgb.channels() != 3) throw DimensionError("backbone: expected an RGB tensor");
  if (rgb.height() % config_.patch != 0 || rgb.width() % config_.patch != 0) {
    throw DimensionError("backbone: resolution " + std::to_string(rgb.height()) + "x" +
                         std::to_string(rgb.width()) + " not divisible by patch " +
                         std::to_string(config_.patch));
  }
  BackboneFeatures out{rgb.height(), rgb.width(), config_.patch, config_.dim, {}};
  Tensor3 x = patchify_(rgb);
  add_position_code(x);
  std::size_t next_tap = 0;
  for (int b = 0; b < config_.depth; ++b) {
    const Block& blk = blocks_[static_cast<std::size_t>(b)];
    const Tensor3 n1 = blk.ln1(x);
    add_inplace(x, blk.attn(n1, n1));
    add_inplace(x, blk.mlp(blk.ln2(x)));
    if (next_tap < taps_.size() && taps_[next_tap] == b + 1) {
      out.taps.push_back(x);
      ++next_tap;
    }
  }
  return out;
}

BackboneFeatures StubBackbone::do_extract(const std::string&, const Tensor3& rgb) const {
  return forward(rgb);
}

ArchiveBackbone::ArchiveBackbone(std::filesystem::path dir, int patch, int dim)
    : dir_(std::move(dir)), patch_(patch), dim_(dim) {
  if (!std::filesystem::is_directory(dir_)) {
    throw ConfigError("feature archive directory not found: " + dir_.string());
  }
}

std::string ArchiveBackbone::describe() const {
  return "archive(patch=" + std::to_string(patch_) + ",dim=" + std::to_string(dim_) + ")";
}

BackboneFeatures ArchiveBackbone::do_extract(const std::string& image_id, const Tensor3& rgb) const {
  BackboneFeatures f = read_feature_archive(feature_archive_path(dir_, image_id));
  if (f.image_height != rgb.height() || f.image_width != rgb.width() || f.patch != patch_ ||
      f.dim != dim_) {
    throw DatasetError("feature archive for '" + image_id + "' has " +
                       std::to_string(f.image_height) + "x" + std::to_string(f.image_width) +
                       " P=" + std::to_string(f.patch) + " d=" + std::to_string(f.dim) +
                       ", expected " + std::to_string(rgb.height()) + "x" +
                       std::to_string(rgb.width()) + " P=" + std::to_string(patch_) +
                       " d=" + std::to_string(dim_));
  }
  return f;
}

}  // namespace mmms::nn
