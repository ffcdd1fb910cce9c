#include "mmms/nn/csnet.hpp"

#include "mmms/errors.hpp"

namespace mmms::nn {

MsPatchEmbed::MsPatchEmbed(const std::array<int, 4>& dims, Init& init) : dims_(dims) {
  for (std::size_t i = 0; i < 4; ++i) {
    const int s = kPyramidStrides[i];
    convs_[i] = Conv2d::make(3, dims[i], s, s, 0, init);
  }
}

FeaturePyramid MsPatchEmbed::operator()(const Tensor3& interaction) const {
  if (interaction.channels() != 3) throw DimensionError("patch embed: expected 3 input planes");
  if (interaction.height() % 32 != 0 || interaction.width() % 32 != 0) {
    throw DimensionError("patch embed: resolution " + std::to_string(interaction.height()) + "x" +
                         std::to_string(interaction.width()) + " not divisible by 32");
  }
  FeaturePyramid out;
  for (std::size_t i = 0; i < 4; ++i) out.levels[i] = convs_[i](interaction);
  validate(out, interaction.height(), interaction.width(), dims_);
  return out;
}

CsNet::CsNet(const CsnetConfig& config, Init& init) : config_(config) {
  if (config_.depth < 1 || config_.head_dim < 1 || config_.mlp_ratio < 1) {
    throw ConfigError("csnet: depth, head size and mlp ratio must be positive");
  }
  for (std::size_t s = 0; s < 4; ++s) {
    const int dim = config_.dims[s];
    Stage& st = stages_[s];
    if (s > 0) {
      st.down = Conv2d::make(config_.dims[s - 1], dim, 3, 2, 1, init);
      st.down_norm = LayerNorm::make(dim);
    }
    for (int b = 0; b < config_.depth; ++b) {
      st.blocks.push_back(
          EncoderBlock::make(dim, reduction_for_stride(kPyramidStrides[s]), config_.mlp_ratio, init));
    }
    st.out_norm = LayerNorm::make(dim);
    head_proj_[s] = Linear::make(dim, config_.head_dim, init);
  }
  fuse_ = Linear::make(4 * config_.head_dim, config_.head_dim, init);
  predict_ = Linear::make(config_.head_dim, 1, init);
}

Tensor3 CsNet::operator()(const FeaturePyramid& mix, const FeaturePyramid& interaction, int height,
                          int width) const {
  validate(mix, height, width, config_.dims);
  validate(interaction, height, width, config_.dims);
  std::array<Tensor3, 4> outputs;
  for (std::size_t s = 0; s < 4; ++s) {
    const Stage& st = stages_[s];
    Tensor3 x = add(mix.levels[s], interaction.levels[s]);
    if (s > 0) add_inplace(x, (*st.down_norm)((*st.down)(outputs[s - 1])));
    for (const EncoderBlock& b : st.blocks) x = b(x);
    outputs[s] = st.out_norm(x);
  }
  const int h4 = height / 4;
  const int w4 = width / 4;
  std::array<Tensor3, 4> projected;
  for (std::size_t s = 0; s < 4; ++s) {
    projected[s] = resize_bilinear(head_proj_[s](outputs[s]), h4, w4);
  }
  Tensor3 fused = fuse_(concat_channels(projected));
  relu_inplace(fused);
  Tensor3 prob = resize_bilinear(predict_(fused), height, width);
  sigmoid_inplace(prob);
  return prob;
}

}  // namespace mmms::nn
