#include "mmms/nn/segformer.hpp"

#include "mmms/errors.hpp"

namespace mmms::nn {

EncoderBlock EncoderBlock::make(int channels, int reduction, int mlp_ratio, Init& init) {
  LayerNorm ln1 = LayerNorm::make(channels);
  Attention attn = Attention::make(channels, default_heads(channels), reduction, init);
  LayerNorm ln2 = LayerNorm::make(channels);
  MixFfn ffn = MixFfn::make(channels, channels * mlp_ratio, init);
  return {std::move(ln1), std::move(attn), std::move(ln2), std::move(ffn)};
}

Tensor3 EncoderBlock::operator()(const Tensor3& x) const {
  const Tensor3 n1 = ln1(x);
  Tensor3 y = add(x, attn(n1, n1));
  add_inplace(y, ffn(ln2(y)));
  return y;
}

SegformerEncoder::SegformerEncoder(const EncoderConfig& config, Init& init) : config_(config) {
  if (config_.in_channels < 1 || config_.depth < 1 || config_.mlp_ratio < 1) {
    throw ConfigError("encoder: channels, depth and mlp ratio must be positive");
  }
  int in = config_.in_channels;
  for (std::size_t s = 0; s < 4; ++s) {
    const int dim = config_.dims[s];
    Stage& st = stages_[s];
    st.embed = s == 0 ? Conv2d::make(in, dim, 7, 4, 3, init) : Conv2d::make(in, dim, 3, 2, 1, init);
    st.embed_norm = LayerNorm::make(dim);
    for (int b = 0; b < config_.depth; ++b) {
      st.blocks.push_back(
          EncoderBlock::make(dim, reduction_for_stride(kPyramidStrides[s]), config_.mlp_ratio, init));
    }
    st.out_norm = LayerNorm::make(dim);
    in = dim;
  }
}

FeaturePyramid SegformerEncoder::operator()(const Tensor3& x) const {
  if (x.channels() != config_.in_channels) {
    throw DimensionError("encoder: expected " + std::to_string(config_.in_channels) +
                         " input channels, got " + std::to_string(x.channels()));
  }
  if (x.height() % 32 != 0 || x.width() % 32 != 0) {
    throw DimensionError("encoder: resolution must be divisible by 32");
  }
  FeaturePyramid out;
  const Tensor3* prev = &x;
  for (std::size_t s = 0; s < 4; ++s) {
    const Stage& st = stages_[s];
    Tensor3 t = st.embed_norm(st.embed(*prev));
    for (const EncoderBlock& b : st.blocks) t = b(t);
    out.levels[s] = st.out_norm(t);
    prev = &out.levels[s];
  }
  validate(out, x.height(), x.width(), config_.dims);
  return out;
}

}  // namespace mmms::nn
