#pragma once

// Forward-only building blocks. Tensors are channels-last (Tensor3), so a
// linear layer over channels is one GEMM with the pixels as rows. Weights are
// drawn from a seeded normal with variance 1/fan_in; biases start at zero and
// normalization gains at one.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mmms/tensor.hpp"

namespace mmms::nn {

// Box-Muller over mt19937_64 so the stream is identical on every standard
// library, unlike std::normal_distribution.
class Init {
 public:
  explicit Init(std::uint64_t seed) : gen_(seed) {}

  double normal();
  void fill_normal(std::span<float> out, double stddev);

 private:
  std::mt19937_64 gen_;
  std::optional<double> spare_;
};

struct Linear {
  int in = 0;
  int out = 0;
  std::vector<float> weight;  // in×out, row-major
  std::vector<float> bias;

  static Linear make(int in, int out, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
  void zero();
};

struct Conv2d {
  int in = 0;
  int out = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
  // ((ky*kernel + kx)*in + ci) × out, row-major.
  std::vector<float> weight;
  std::vector<float> bias;

  static Conv2d make(int in, int out, int kernel, int stride, int padding, Init& init);
  // "same" padding for odd kernels at stride 1.
  static Conv2d same(int in, int out, int kernel, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
  int output_size(int size) const noexcept { return (size + 2 * padding - kernel) / stride + 1; }
  void zero();
};

// 3×3 depthwise convolution, stride 1, zero padding 1.
struct DepthwiseConv3 {
  int channels = 0;
  std::vector<float> weight;  // 9 × channels
  std::vector<float> bias;

  static DepthwiseConv3 make(int channels, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
};

// Normalizes each pixel's channel vector.
struct LayerNorm {
  int channels = 0;
  std::vector<float> gain;
  std::vector<float> bias;
  double eps = 1e-5;

  static LayerNorm make(int channels);
  Tensor3 operator()(const Tensor3& x) const;
};

// Group normalization with a single group: statistics over the whole tensor,
// per-channel affine.
struct GroupNorm1 {
  int channels = 0;
  std::vector<float> gain;
  std::vector<float> bias;
  double eps = 1e-5;

  static GroupNorm1 make(int channels);
  Tensor3 operator()(const Tensor3& x) const;
};

void gelu_inplace(Tensor3& x);
void relu_inplace(Tensor3& x);
void sigmoid_inplace(Tensor3& x);

// Bilinear resize with half-pixel centers (align_corners = false).
Tensor3 resize_bilinear(const Tensor3& x, int height, int width);

// Both throw DimensionError on shape mismatch.
void add_inplace(Tensor3& a, const Tensor3& b);
Tensor3 add(const Tensor3& a, const Tensor3& b);

// Concatenates along channels.
Tensor3 concat_channels(std::span<const Tensor3> parts);

// Folds non-overlapping s×s patches into channels: (H, W, C) -> (H/s, W/s, s·s·C).
Tensor3 patch_merge(const Tensor3& x, int s);

int default_heads(int channels);

// Scaled dot-product attention with keys and values spatially reduced by
// `reduction` (a perfect square): √R×√R patches are merged, projected back
// to C channels and layer-normalized. Queries keep their full resolution.
struct Attention {
  int channels = 0;
  int heads = 1;
  int reduction = 1;
  Linear q;
  Linear k;
  Linear v;
  Linear proj;
  std::optional<Linear> sr;
  std::optional<LayerNorm> sr_norm;

  static Attention make(int channels, int heads, int reduction, Init& init);
  Tensor3 operator()(const Tensor3& query, const Tensor3& kv) const;
  // Number of keys seen for a kv grid of the given size.
  int key_count(int height, int width) const;
};

struct Mlp {
  Linear fc1;
  Linear fc2;

  static Mlp make(int channels, int hidden, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
};

// fc1 -> depthwise 3×3 -> GELU -> fc2
struct MixFfn {
  Linear fc1;
  DepthwiseConv3 dw;
  Linear fc2;

  static MixFfn make(int channels, int hidden, Init& init);
  Tensor3 operator()(const Tensor3& x) const;
};

}  // namespace mmms::nn
