#pragma once

// The full forward network. prepare() runs the once-per-image part
// (backbone, ParallelFPN, MMFuser) and returns the fused pyramid; predict()
// runs only MSPatchEmbed and CSNet on top of it.

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mmms/dataset.hpp"
#include "mmms/mask.hpp"
#include "mmms/nn/backbone.hpp"
#include "mmms/nn/csnet.hpp"
#include "mmms/nn/fpn.hpp"
#include "mmms/nn/mmfuser.hpp"

namespace mmms::nn {

struct ModelConfig {
  int resolution = 448;  // square working resolution
  BackboneConfig backbone;
  std::array<int, 4> dims = kDefaultEmbed;
  std::vector<ModalityInput> modalities;
  int encoder_depth = 1;
  int csnet_depth = 1;
  int mlp_ratio = 4;
  int head_dim = 256;
  int disk_radius = kDefaultDiskRadius;
  std::uint64_t seed = 0;

  std::string describe() const;
};

struct ModelCounters {
  long backbone = 0;
  long fpn = 0;
  long fuser = 0;
  long patch_embed = 0;
  long csnet = 0;
};

struct PreparedImage {
  std::string image_id;
  int source_height = 0;
  int source_width = 0;
  FeaturePyramid f_mix;
  std::uint64_t digest = 0;  // of f_mix
};

std::uint64_t pyramid_digest(const FeaturePyramid& p);

class Model {
 public:
  // Without a provider the model builds a stub backbone from config.backbone.
  explicit Model(ModelConfig config, std::shared_ptr<const FeatureProvider> provider = nullptr);

  PreparedImage prepare(const Sample& sample) const;

  // Probability map at the sample's own resolution, H×W×1.
  Tensor3 predict(const PreparedImage& image, std::span<const Click> clicks,
                  const BinaryMask& prev_mask) const;

  ModelCounters counters() const;
  const ModelConfig& config() const noexcept { return config_; }
  const FeatureProvider& provider() const noexcept { return *provider_; }
  std::string describe() const;

 private:
  ModelConfig config_;
  std::shared_ptr<const FeatureProvider> provider_;
  ParallelFpn fpn_;
  MmFuser fuser_;
  MsPatchEmbed embed_;
  CsNet csnet_;
  mutable std::atomic<long> fpn_calls_{0};
  mutable std::atomic<long> fuser_calls_{0};
  mutable std::atomic<long> embed_calls_{0};
  mutable std::atomic<long> csnet_calls_{0};
};

}  // namespace mmms::nn
