#include "mmms/nn/mmfuser.hpp"

#include "mmms/errors.hpp"

namespace mmms::nn {

CrossBlock CrossBlock::make(int channels, int reduction, int mlp_ratio, Init& init) {
  LayerNorm ni = LayerNorm::make(channels);
  LayerNorm nm = LayerNorm::make(channels);
  Attention attn = Attention::make(channels, default_heads(channels), reduction, init);
  LayerNorm nmlp = LayerNorm::make(channels);
  Mlp mlp = Mlp::make(channels, channels * mlp_ratio, init);
  return {std::move(ni), std::move(nm), std::move(attn), std::move(nmlp), std::move(mlp)};
}

Tensor3 CrossBlock::operator()(const Tensor3& img, const Tensor3& mod) const {
  if (!img.same_shape(mod)) throw DimensionError("cross block: image and modality shapes differ");
  Tensor3 fused = attn(norm_img(img), norm_mod(mod));
  add_inplace(fused, img);
  add_inplace(fused, mod);
  Tensor3 out = mlp(norm_mlp(fused));
  add_inplace(out, fused);
  return out;
}

MmFuser::MmFuser(const FuserConfig& config, Init& init) : config_(config) {
  for (const ModalityInput& m : config_.modalities) {
    encoders_.emplace_back(
        EncoderConfig{m.channels, config_.dims, config_.encoder_depth, config_.encoder_mlp_ratio},
        init);
    std::array<CrossBlock, 4> blocks;
    for (std::size_t i = 0; i < 4; ++i) {
      blocks[i] = CrossBlock::make(config_.dims[i], reduction_for_stride(kPyramidStrides[i]),
                                   config_.cross_mlp_ratio, init);
    }
    cross_.push_back(std::move(blocks));
  }
}

FeaturePyramid MmFuser::operator()(const FeaturePyramid& img,
                                   std::span<const Tensor3> modalities) const {
  if (modalities.size() != encoders_.size()) {
    throw DimensionError("fuser: expected " + std::to_string(encoders_.size()) +
                         " modalities, got " + std::to_string(modalities.size()));
  }
  const int height = img.levels[0].height() * 4;
  const int width = img.levels[0].width() * 4;
  validate(img, height, width, config_.dims);
  FeaturePyramid current = img;
  for (std::size_t m = 0; m < encoders_.size(); ++m) {
    if (modalities[m].height() != height || modalities[m].width() != width) {
      throw DimensionError("fuser: modality '" + config_.modalities[m].name + "' is " +
                           std::to_string(modalities[m].height()) + "x" +
                           std::to_string(modalities[m].width()) + ", image is " +
                           std::to_string(height) + "x" + std::to_string(width));
    }
    const FeaturePyramid mod = encoders_[m](modalities[m]);
    FeaturePyramid next;
    for (std::size_t i = 0; i < 4; ++i) next.levels[i] = cross_[m][i](current.levels[i], mod.levels[i]);
    current = std::move(next);
  }
  return current;
}

}  // namespace mmms::nn
