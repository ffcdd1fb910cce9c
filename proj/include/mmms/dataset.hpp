#pragma once

// On-disk dataset layout:
//
//   <root>/manifest.json
//   <root>/rgb/<id>.png          8-bit RGB
//   <root>/gt/<id>.png           indexed (or 8/16-bit gray) joint labels, 0 = background
//   <root>/<modality>/<id>.png   8- or 16-bit single-channel rasters
//
// manifest.json: {"images":[ids], "modalities":[{"name","channels","bit_depth","scale"}],
//                 "gt":"joint_png"}

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmms/mask.hpp"
#include "mmms/tensor.hpp"

namespace mmms {

struct ModalitySpec {
  std::string name;
  int channels = 1;
  int bit_depth = 8;
  // Raw sample values are divided by this at load time.
  double scale = 255.0;

  friend bool operator==(const ModalitySpec&, const ModalitySpec&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> images;
  std::vector<ModalitySpec> modalities;
  std::string gt_format = "joint_png";
};

struct NamedTensor {
  std::string name;
  Tensor3 tensor;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Sample {
  std::string id;
  Tensor3 rgb;  // H×W×3 in [0, 1]
  std::vector<NamedTensor> modalities;
  JointMask gt_joint;
  // label_mapping[k] is the raw ground-truth value of surface k; entry 0 is 0.
  std::vector<std::uint32_t> label_mapping;

  int height() const noexcept { return rgb.height(); }
  int width() const noexcept { return rgb.width(); }
  const Tensor3* modality(const std::string& name) const;
};

// Throws DatasetError.
DatasetManifest load_manifest(const std::filesystem::path& root);
void save_manifest(const DatasetManifest& manifest);

Sample load_sample(const DatasetManifest& manifest, const std::string& id);

// Writes the rasters of `sample` into the manifest's layout. Ground truth is
// stored with the contiguous surface ids.
void write_sample(const DatasetManifest& manifest, const Sample& sample);

// Maps raw label values to contiguous ids 0..L in ascending raw order.
struct Relabeling {
  std::vector<SurfaceLabel> labels;
  std::vector<std::uint32_t> mapping;
};
Relabeling relabel_contiguous(const std::vector<std::uint32_t>& raw);

// Stable 64-bit digest of the manifest content (ids, modalities, layout).
std::uint64_t manifest_fingerprint(const DatasetManifest& manifest);

}  // namespace mmms
