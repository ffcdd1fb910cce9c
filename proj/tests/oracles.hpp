#pragma once

// Slow, straightforward reference implementations the tests compare the
// library against. None of these call into the library's algorithms.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "mmms/mask.hpp"
#include "mmms/tensor.hpp"

namespace oracle {

using Bits = std::vector<std::uint8_t>;
using Labels = std::vector<std::uint16_t>;

double iou(const Bits& a, const Bits& b);

// rule: 0 classical, 1 revisit.
Labels insert(const Labels& joint, int k, const Bits& mask, int rule);
Bits extract(const Labels& joint, int k);

// Squared distance from every region pixel to the closest non-region pixel,
// including the virtual ring of pixels just outside the image.
std::vector<std::int64_t> edt_squared(const Bits& region, int h, int w);

// 4-connected components by union-find, each sorted, ordered by first pixel.
std::vector<std::vector<int>> components(const Bits& mask, int h, int w);

// Click rule evaluated by exhaustive search.
std::optional<mmms::Click> next_click(const Bits& pred, const Bits& gt, int h, int w);

// Label of each pixel under "positive iff its distance to the closest
// positive seed is no larger than to the closest negative seed", with
// distances from Bellman-Ford sweeps. Also returns the combined distance.
struct Geodesic {
  std::vector<double> distance;
  std::vector<std::uint8_t> positive;
};
Geodesic geodesic(const std::vector<float>& features, int h, int w, int channels,
                  const std::vector<mmms::Click>& clicks, double eps);

// Direct convolution; weight layout ((ky*k + kx)*in + ci)*out + co.
mmms::Tensor3 conv2d(const mmms::Tensor3& x, const std::vector<float>& weight,
                     const std::vector<float>& bias, int out, int kernel, int stride, int padding);

// y = x·W + b per pixel, W in×out row-major.
mmms::Tensor3 linear(const mmms::Tensor3& x, const std::vector<float>& weight,
                     const std::vector<float>& bias, int out);

// Multi-head softmax attention between already projected q (Nq×C) and
// k, v (Nk×C), per head on contiguous channel slices.
std::vector<double> attention(const std::vector<double>& q, const std::vector<double>& k,
                              const std::vector<double>& v, int nq, int nk, int channels,
                              int heads);

// Random helpers.
Bits random_bits(std::mt19937_64& rng, std::size_t n, double density);
Bits random_blobs(std::mt19937_64& rng, int h, int w, int blobs);
mmms::BinaryMask to_mask(const Bits& bits, int h, int w);
Bits from_mask(const mmms::BinaryMask& m);

}  // namespace oracle
