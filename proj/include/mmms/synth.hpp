#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mmms/dataset.hpp"

namespace mmms {

enum class OverlapMode { disjoint, adjacent };

OverlapMode parse_overlap_mode(const std::string& text);  // throws ConfigError

struct SynthParams {
  std::uint64_t seed = 0;
  int count = 1;
  int surfaces_per_image = 3;
  OverlapMode overlap = OverlapMode::adjacent;
  int height = 96;
  int width = 128;
};

// One deterministic sample: colored rectangles/ellipses on a textured
// background, a "depth" modality that is constant per shape, and the joint
// ground truth. In adjacent mode at least one pair of surfaces shares a
// boundary; in disjoint mode no two surfaces touch (not even diagonally).
Sample generate_synthetic_sample(const SynthParams& params, int index);

// Writes `count` samples plus manifest.json under `root` and returns the manifest.
DatasetManifest generate_synthetic(const SynthParams& params, const std::filesystem::path& root);

}  // namespace mmms
