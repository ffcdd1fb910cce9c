#pragma once

// Hierarchical efficient-attention encoder in the SegFormer style: four
// stages of overlapping patch embedding followed by transformer blocks whose
// keys and values are spatially reduced.

#include <array>
#include <vector>

#include "mmms/nn/fpn.hpp"
#include "mmms/nn/layers.hpp"

namespace mmms::nn {

// Key/value reduction rate for a pyramid stride: R = (32 / stride)².
constexpr int reduction_for_stride(int stride) { return (32 / stride) * (32 / stride); }

// x += Attn(LN(x)); x += MixFFN(LN(x))
struct EncoderBlock {
  LayerNorm ln1;
  Attention attn;
  LayerNorm ln2;
  MixFfn ffn;

  static EncoderBlock make(int channels, int reduction, int mlp_ratio, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
};

struct EncoderConfig {
  int in_channels = 1;
  std::array<int, 4> dims = kDefaultEmbed;
  int depth = 1;
  int mlp_ratio = 4;
};

class SegformerEncoder {
 public:
  SegformerEncoder(const EncoderConfig& config, Init& init);

  // Input H×W×in_channels with H, W divisible by 32.
  FeaturePyramid operator()(const Tensor3& x) const;

  const EncoderConfig& config() const noexcept { return config_; }

 private:
  struct Stage {
    Conv2d embed;
    LayerNorm embed_norm;
    std::vector<EncoderBlock> blocks;
    LayerNorm out_norm;
  };

  EncoderConfig config_;
  std::array<Stage, 4> stages_;
};

}  // namespace mmms::nn
