#include "mmms/synth.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "mmms/errors.hpp"

namespace mmms {
namespace {

struct Box {
  int r0, c0, r1, c1;  // inclusive
  bool ellipse;

  bool covers(int r, int c) const {
    if (r < r0 || r > r1 || c < c0 || c > c1) return false;
    if (!ellipse) return true;
    const double cy = (r0 + r1) / 2.0;
    const double cx = (c0 + c1) / 2.0;
    const double ry = (r1 - r0 + 1) / 2.0;
    const double rx = (c1 - c0 + 1) / 2.0;
    const double dy = (r - cy) / ry;
    const double dx = (c - cx) / rx;
    return dy * dy + dx * dx <= 1.0;
  }

  bool near(const Box& o, int gap) const {
    return !(r1 + gap < o.r0 || o.r1 + gap < r0 || c1 + gap < o.c0 || o.c1 + gap < c0);
  }
};

using Rgb = std::array<int, 3>;

int color_distance(const Rgb& a, const Rgb& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

class Painter {
 public:
  Painter(const SynthParams& p, int index)
      : params_(p), rng_(p.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(index) + 1) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  Box random_box(bool ellipse) {
    const int h = params_.height;
    const int w = params_.width;
    const int bh = uniform(std::max(4, h / 6), std::max(5, h / 3));
    const int bw = uniform(std::max(4, w / 6), std::max(5, w / 3));
    const int r0 = uniform(1, std::max(1, h - bh - 1));
    const int c0 = uniform(1, std::max(1, w - bw - 1));
    return {r0, c0, std::min(h - 1, r0 + bh - 1), std::min(w - 1, c0 + bw - 1), ellipse};
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  SynthParams params_;
  std::mt19937_64 rng_;
};

bool surfaces_touch(const std::vector<SurfaceLabel>& labels, int h, int w) {
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const SurfaceLabel a = labels[static_cast<std::size_t>(r * w + c)];
      if (a == 0) continue;
      if (c + 1 < w) {
        const SurfaceLabel b = labels[static_cast<std::size_t>(r * w + c + 1)];
        if (b != 0 && b != a) return true;
      }
      if (r + 1 < h) {
        const SurfaceLabel b = labels[static_cast<std::size_t>((r + 1) * w + c)];
        if (b != 0 && b != a) return true;
      }
    }
  }
  return false;
}

}  // namespace

OverlapMode parse_overlap_mode(const std::string& text) {
  if (text == "disjoint") return OverlapMode::disjoint;
  if (text == "adjacent") return OverlapMode::adjacent;
  throw ConfigError("overlap mode must be 'disjoint' or 'adjacent', got '" + text + "'");
}

Sample generate_synthetic_sample(const SynthParams& params, int index) {
  if (params.surfaces_per_image < 1) throw ConfigError("surfaces per image must be >= 1");
  if (params.height < 16 || params.width < 16) throw ConfigError("synthetic images must be >= 16x16");
  const int h = params.height;
  const int w = params.width;
  const int k_count = params.surfaces_per_image;
  Painter painter(params, index);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<Box> boxes;
    bool placed = true;
    for (int k = 0; k < k_count && placed; ++k) {
      const bool ellipse = painter.uniform(0, 2) == 0;
      if (params.overlap == OverlapMode::disjoint) {
        placed = false;
        for (int tries = 0; tries < 500; ++tries) {
          const Box b = painter.random_box(ellipse);
          const bool clear = std::none_of(boxes.begin(), boxes.end(),
                                          [&](const Box& o) { return b.near(o, 2); });
          if (clear) {
            boxes.push_back(b);
            placed = true;
            break;
          }
        }
      } else if (k == 1) {
        // Rectangle flush against the right or bottom edge of the first shape.
        const Box& first = boxes.front();
        Box b = painter.random_box(false);
        if (painter.uniform(0, 1) == 0 && first.c1 + 4 < w) {
          const int bw = b.c1 - b.c0;
          b.c0 = first.c1 + 1;
          b.c1 = std::min(w - 1, b.c0 + bw);
          b.r0 = std::clamp(b.r0, 0, first.r1);
          b.r1 = std::max(b.r1, first.r0 + 2);
        } else {
          const int bh = b.r1 - b.r0;
          b.r0 = std::min(h - 4, first.r1 + 1);
          b.r1 = std::min(h - 1, b.r0 + bh);
          b.c0 = std::clamp(b.c0, 0, first.c1);
          b.c1 = std::max(b.c1, first.c0 + 2);
        }
        boxes.push_back(b);
      } else {
        boxes.push_back(painter.random_box(k == 0 ? false : ellipse));
      }
    }
    if (!placed) continue;

    std::vector<SurfaceLabel> labels(static_cast<std::size_t>(h * w), 0);
    for (int k = 0; k < k_count; ++k) {
      const Box& b = boxes[static_cast<std::size_t>(k)];
      for (int r = std::max(0, b.r0); r <= std::min(h - 1, b.r1); ++r) {
        for (int c = std::max(0, b.c0); c <= std::min(w - 1, b.c1); ++c) {
          if (b.covers(r, c)) labels[static_cast<std::size_t>(r * w + c)] = static_cast<SurfaceLabel>(k + 1);
        }
      }
    }
    std::vector<int> area(static_cast<std::size_t>(k_count) + 1, 0);
    for (SurfaceLabel l : labels) ++area[l];
    const bool all_visible =
        std::all_of(area.begin() + 1, area.end(), [](int a) { return a >= 16; });
    if (!all_visible) continue;
    if (params.overlap == OverlapMode::adjacent && k_count >= 2 && !surfaces_touch(labels, h, w)) {
      continue;
    }
    if (params.overlap == OverlapMode::disjoint && surfaces_touch(labels, h, w)) continue;

    // Colors: background plus one well-separated color per surface.
    std::vector<Rgb> colors;
    colors.push_back({painter.uniform(20, 90), painter.uniform(20, 90), painter.uniform(20, 90)});
    for (int k = 0; k < k_count; ++k) {
      Rgb c{};
      for (int tries = 0; tries < 1000; ++tries) {
        c = {painter.uniform(0, 255), painter.uniform(0, 255), painter.uniform(0, 255)};
        const bool distinct = std::all_of(colors.begin(), colors.end(), [&](const Rgb& o) {
          return color_distance(c, o) >= 120;
        });
        if (distinct) break;
      }
      colors.push_back(c);
    }
    std::vector<int> depth_raw;
    depth_raw.push_back(painter.uniform(2000, 6000));
    for (int k = 0; k < k_count; ++k) depth_raw.push_back(painter.uniform(12000, 64000));

    Sample s;
    s.id = "synth_" + std::string(index < 10 ? "000" : index < 100 ? "00" : index < 1000 ? "0" : "") +
           std::to_string(index);
    s.rgb = Tensor3(h, w, 3);
    Tensor3 depth(h, w, 1);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const SurfaceLabel l = labels[static_cast<std::size_t>(r * w + c)];
        const Rgb& base = colors[l];
        for (int ch = 0; ch < 3; ++ch) {
          const int v = std::clamp(base[static_cast<std::size_t>(ch)] + painter.uniform(-6, 6), 0, 255);
          s.rgb.at(r, c, ch) = static_cast<float>(v) / 255.0f;
        }
        int d = depth_raw[l];
        if (l == 0) d += (r * 4000) / h;  // background slopes away
        depth.at(r, c, 0) = static_cast<float>(d) / 65535.0f;
      }
    }
    s.modalities.push_back({"depth", std::move(depth)});
    s.gt_joint = JointMask(h, w, k_count, std::move(labels));
    s.label_mapping.resize(static_cast<std::size_t>(k_count) + 1);
    for (int k = 0; k <= k_count; ++k) s.label_mapping[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(k);
    return s;
  }
  throw ConfigError("could not place " + std::to_string(k_count) + " surfaces in a " +
                    std::to_string(h) + "x" + std::to_string(w) + " image");
}

DatasetManifest generate_synthetic(const SynthParams& params, const std::filesystem::path& root) {
  if (params.count < 1) throw ConfigError("count must be >= 1");
  DatasetManifest m;
  m.root = root;
  m.modalities.push_back({"depth", 1, 16, 65535.0});
  for (int i = 0; i < params.count; ++i) {
    Sample s = generate_synthetic_sample(params, i);
    m.images.push_back(s.id);
    write_sample(m, s);
  }
  save_manifest(m);
  return m;
}

}  // namespace mmms
