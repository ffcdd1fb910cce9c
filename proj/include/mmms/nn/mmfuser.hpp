#pragma once

// Multi-modal fusion on the image pyramid. Every non-RGB modality gets its
// own hierarchical encoder; per pyramid level a CrossBlock lets the image
// features attend to the modality features. Several modalities are chained:
// the output for modality m is the image-side input for modality m + 1.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "mmms/nn/segformer.hpp"

namespace mmms::nn {

// f̂ = EffCA(LN(img), LN(mod)) + img + mod;  out = MLP(LN(f̂)) + f̂
struct CrossBlock {
  LayerNorm norm_img;
  LayerNorm norm_mod;
  Attention attn;
  LayerNorm norm_mlp;
  Mlp mlp;

  static CrossBlock make(int channels, int reduction, int mlp_ratio, Init& init);
  Tensor3 operator()(const Tensor3& img, const Tensor3& mod) const;
};

struct ModalityInput {
  std::string name;
  int channels = 1;
};

struct FuserConfig {
  std::vector<ModalityInput> modalities;
  std::array<int, 4> dims = kDefaultEmbed;
  int encoder_depth = 1;
  int encoder_mlp_ratio = 4;
  int cross_mlp_ratio = 4;
};

class MmFuser {
 public:
  MmFuser(const FuserConfig& config, Init& init);

  // `modalities` follow config().modalities order; each H×W×C_m at the image
  // resolution the pyramid was built from.
  FeaturePyramid operator()(const FeaturePyramid& img, std::span<const Tensor3> modalities) const;

  const FuserConfig& config() const noexcept { return config_; }
  std::vector<std::array<CrossBlock, 4>>& cross_blocks() noexcept { return cross_; }
  const std::vector<SegformerEncoder>& encoders() const noexcept { return encoders_; }

 private:
  FuserConfig config_;
  std::vector<SegformerEncoder> encoders_;
  std::vector<std::array<CrossBlock, 4>> cross_;
};

}  // namespace mmms::nn
