#pragma once

// Per-click part of the network: MSPatchEmbed turns the interaction tensor
// into a pyramid, CSNet combines it with the fused image pyramid and predicts
// a foreground probability map.

#include <array>
#include <optional>
#include <vector>

#include "mmms/nn/segformer.hpp"

namespace mmms::nn {

// One kernel = stride = s convolution per pyramid stride, 3 -> C_s channels.
class MsPatchEmbed {
 public:
  MsPatchEmbed(const std::array<int, 4>& dims, Init& init);

  FeaturePyramid operator()(const Tensor3& interaction) const;

  std::array<Conv2d, 4>& convs() noexcept { return convs_; }

 private:
  std::array<int, 4> dims_;
  std::array<Conv2d, 4> convs_;
};

struct CsnetConfig {
  std::array<int, 4> dims = kDefaultEmbed;
  int depth = 1;
  int mlp_ratio = 4;
  int head_dim = 256;
};

// Stage s consumes f_mix[s] + f_int[s]; from the second stage on, the
// previous stage output is brought to the stage's resolution by a stride-2
// 3×3 convolution (plus LayerNorm) and added. The head projects every stage
// to head_dim channels, resizes to stride 4, concatenates, fuses with a 1×1
// projection + ReLU, predicts one logit per pixel, resizes to H×W and applies
// a sigmoid.
class CsNet {
 public:
  CsNet(const CsnetConfig& config, Init& init);

  // H×W×1 probabilities.
  Tensor3 operator()(const FeaturePyramid& mix, const FeaturePyramid& interaction, int height,
                     int width) const;

  const CsnetConfig& config() const noexcept { return config_; }

 private:
  struct Stage {
    std::optional<Conv2d> down;
    std::optional<LayerNorm> down_norm;
    std::vector<EncoderBlock> blocks;
    LayerNorm out_norm;
  };

  CsnetConfig config_;
  std::array<Stage, 4> stages_;
  std::array<Linear, 4> head_proj_;
  Linear fuse_;
  Linear predict_;
};

}  // namespace mmms::nn
