#include "mmms/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mmms/errors.hpp"
#include "mmms/simd/kernels.hpp"

namespace mmms::nn {
namespace {

// Upper bound on scratch floats for im2col and attention score blocks.
constexpr std::size_t kScratchFloats = std::size_t{1} << 22;

std::string shape_of(const Tensor3& x) {
  return std::to_string(x.height()) + "x" + std::to_string(x.width()) + "x" +
         std::to_string(x.channels());
}

void require_channels(const Tensor3& x, int channels, const char* what) {
  if (x.channels() != channels) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(channels) +
                         " channels, got " + shape_of(x));
  }
}

void add_bias(float* y, std::size_t rows, const std::vector<float>& bias) {
  const std::size_t n = bias.size();
  for (std::size_t r = 0; r < rows; ++r) {
    float* row = y + r * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
}

const simd::KernelTable& kernels() { return simd::active_kernels(); }

}  // namespace

double Init::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = static_cast<double>((gen_() >> 11) + 1) * 0x1p-53;
  const double u2 = static_cast<double>(gen_() >> 11) * 0x1p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

void Init::fill_normal(std::span<float> out, double stddev) {
  for (float& v : out) v = static_cast<float>(normal() * stddev);
}

Linear Linear::make(int in, int out, Init& init) {
  if (in < 1 || out < 1) throw DimensionError("Linear: sizes must be positive");
  Linear l{in, out, std::vector<float>(static_cast<std::size_t>(in) * static_cast<std::size_t>(out)),
           std::vector<float>(static_cast<std::size_t>(out), 0.0f)};
  init.fill_normal(l.weight, 1.0 / std::sqrt(static_cast<double>(in)));
  return l;
}

Tensor3 Linear::operator()(const Tensor3& x) const {
  require_channels(x, in, "Linear");
  Tensor3 y(x.height(), x.width(), out);
  kernels().gemm(x.pixels(), static_cast<std::size_t>(out), static_cast<std::size_t>(in), x.data(),
                 static_cast<std::size_t>(in), weight.data(), static_cast<std::size_t>(out), y.data(),
                 static_cast<std::size_t>(out), false);
  add_bias(y.data(), y.pixels(), bias);
  return y;
}

void Linear::zero() {
  std::fill(weight.begin(), weight.end(), 0.0f);
  std::fill(bias.begin(), bias.end(), 0.0f);
}

Conv2d Conv2d::make(int in, int out, int kernel, int stride, int padding, Init& init) {
  if (in < 1 || out < 1 || kernel < 1 || stride < 1 || padding < 0) {
    throw DimensionError("Conv2d: invalid geometry");
  }
  Conv2d c{in, out, kernel, stride, padding,
           std::vector<float>(static_cast<std::size_t>(kernel * kernel) * static_cast<std::size_t>(in) *
                              static_cast<std::size_t>(out)),
           std::vector<float>(static_cast<std::size_t>(out), 0.0f)};
  init.fill_normal(c.weight, 1.0 / std::sqrt(static_cast<double>(kernel * kernel * in)));
  return c;
}

Conv2d Conv2d::same(int in, int out, int kernel, Init& init) {
  return make(in, out, kernel, 1, kernel / 2, init);
}

Tensor3 Conv2d::operator()(const Tensor3& x) const {
  require_channels(x, in, "Conv2d");
  const int oh = output_size(x.height());
  const int ow = output_size(x.width());
  if (oh < 1 || ow < 1) throw DimensionError("Conv2d: input " + shape_of(x) + " too small");
  Tensor3 y(oh, ow, out);
  const auto n_out = static_cast<std::size_t>(out);

  if (kernel == 1 && stride == 1 && padding == 0) {
    kernels().gemm(x.pixels(), n_out, static_cast<std::size_t>(in), x.data(),
                   static_cast<std::size_t>(in), weight.data(), n_out, y.data(), n_out, false);
    add_bias(y.data(), y.pixels(), bias);
    return y;
  }

  const std::size_t kdim = static_cast<std::size_t>(kernel * kernel) * static_cast<std::size_t>(in);
  const std::size_t total = static_cast<std::size_t>(oh) * static_cast<std::size_t>(ow);
  const std::size_t chunk = std::max<std::size_t>(1, kScratchFloats / kdim);
  std::vector<float> cols(std::min(chunk, total) * kdim);
  const auto cin = static_cast<std::size_t>(in);
  for (std::size_t start = 0; start < total; start += chunk) {
    const std::size_t rows = std::min(chunk, total - start);
    for (std::size_t p = 0; p < rows; ++p) {
      const int oy = static_cast<int>((start + p) / static_cast<std::size_t>(ow));
      const int ox = static_cast<int>((start + p) % static_cast<std::size_t>(ow));
      float* dst = cols.data() + p * kdim;
      for (int ky = 0; ky < kernel; ++ky) {
        const int iy = oy * stride - padding + ky;
        for (int kx = 0; kx < kernel; ++kx) {
          const int ix = ox * stride - padding + kx;
          float* cell = dst + static_cast<std::size_t>(ky * kernel + kx) * cin;
          if (iy < 0 || ix < 0 || iy >= x.height() || ix >= x.width()) {
            std::fill_n(cell, cin, 0.0f);
          } else {
            std::copy_n(x.pixel(iy, ix).data(), cin, cell);
          }
        }
      }
    }
    kernels().gemm(rows, n_out, kdim, cols.data(), kdim, weight.data(), n_out,
                   y.data() + start * n_out, n_out, false);
  }
  add_bias(y.data(), y.pixels(), bias);
  return y;
}

void Conv2d::zero() {
  std::fill(weight.begin(), weight.end(), 0.0f);
  std::fill(bias.begin(), bias.end(), 0.0f);
}

DepthwiseConv3 DepthwiseConv3::make(int channels, Init& init) {
  DepthwiseConv3 d{channels, std::vector<float>(9 * static_cast<std::size_t>(channels)),
                   std::vector<float>(static_cast<std::size_t>(channels), 0.0f)};
  init.fill_normal(d.weight, 1.0 / 3.0);
  return d;
}

Tensor3 DepthwiseConv3::operator()(const Tensor3& x) const {
  require_channels(x, channels, "DepthwiseConv3");
  Tensor3 y(x.height(), x.width(), channels);
  const auto c = static_cast<std::size_t>(channels);
  for (int r = 0; r < x.height(); ++r) {
    for (int col = 0; col < x.width(); ++col) {
      float* dst = y.pixel(r, col).data();
      std::copy(bias.begin(), bias.end(), dst);
      for (int ky = 0; ky < 3; ++ky) {
        const int iy = r + ky - 1;
        if (iy < 0 || iy >= x.height()) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int ix = col + kx - 1;
          if (ix < 0 || ix >= x.width()) continue;
          const float* src = x.pixel(iy, ix).data();
          const float* w = weight.data() + static_cast<std::size_t>(ky * 3 + kx) * c;
          for (std::size_t j = 0; j < c; ++j) dst[j] += w[j] * src[j];
        }
      }
    }
  }
  return y;
}

LayerNorm LayerNorm::make(int channels) {
  return {channels, std::vector<float>(static_cast<std::size_t>(channels), 1.0f),
          std::vector<float>(static_cast<std::size_t>(channels), 0.0f)};
}

Tensor3 LayerNorm::operator()(const Tensor3& x) const {
  require_channels(x, channels, "LayerNorm");
  Tensor3 y(x.height(), x.width(), channels);
  const auto c = static_cast<std::size_t>(channels);
  const float* src = x.data();
  float* dst = y.data();
  for (std::size_t p = 0; p < x.pixels(); ++p, src += c, dst += c) {
    double sum = 0.0;
    double sum_sq = 0.0;
    kernels().moments(src, c, &sum, &sum_sq);
    const double mean = sum / static_cast<double>(c);
    const double var = std::max(0.0, sum_sq / static_cast<double>(c) - mean * mean);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      dst[j] = static_cast<float>((src[j] - mean) * inv) * gain[j] + bias[j];
    }
  }
  return y;
}

GroupNorm1 GroupNorm1::make(int channels) {
  return {channels, std::vector<float>(static_cast<std::size_t>(channels), 1.0f),
          std::vector<float>(static_cast<std::size_t>(channels), 0.0f)};
}

Tensor3 GroupNorm1::operator()(const Tensor3& x) const {
  require_channels(x, channels, "GroupNorm");
  double sum = 0.0;
  double sum_sq = 0.0;
  kernels().moments(x.data(), x.size(), &sum, &sum_sq);
  const double n = static_cast<double>(x.size());
  const double mean = sum / n;
  const double var = std::max(0.0, sum_sq / n - mean * mean);
  const double inv = 1.0 / std::sqrt(var + eps);
  Tensor3 y(x.height(), x.width(), channels);
  const auto c = static_cast<std::size_t>(channels);
  const float* src = x.data();
  float* dst = y.data();
  for (std::size_t p = 0; p < x.pixels(); ++p, src += c, dst += c) {
    for (std::size_t j = 0; j < c; ++j) {
      dst[j] = static_cast<float>((src[j] - mean) * inv) * gain[j] + bias[j];
    }
  }
  return y;
}

void gelu_inplace(Tensor3& x) {
  for (float& v : x.values()) {
    v = static_cast<float>(0.5 * v * (1.0 + std::erf(v * (1.0 / std::numbers::sqrt2))));
  }
}

void relu_inplace(Tensor3& x) {
  for (float& v : x.values()) v = std::max(v, 0.0f);
}

void sigmoid_inplace(Tensor3& x) {
  for (float& v : x.values()) v = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(v))));
}

Tensor3 resize_bilinear(const Tensor3& x, int height, int width) {
  if (height == x.height() && width == x.width()) return x;
  Tensor3 y(height, width, x.channels());
  const auto c = static_cast<std::size_t>(x.channels());
  const double sy = static_cast<double>(x.height()) / height;
  const double sx = static_cast<double>(x.width()) / width;
  const auto source = [](int dst, double scale, int size, int& i0, int& i1, float& frac) {
    const double s = std::max(0.0, (dst + 0.5) * scale - 0.5);
    i0 = std::min(static_cast<int>(s), size - 1);
    i1 = std::min(i0 + 1, size - 1);
    frac = static_cast<float>(s - i0);
  };
  std::vector<int> x0(static_cast<std::size_t>(width));
  std::vector<int> x1(static_cast<std::size_t>(width));
  std::vector<float> fx(static_cast<std::size_t>(width));
  for (int j = 0; j < width; ++j) {
    source(j, sx, x.width(), x0[static_cast<std::size_t>(j)], x1[static_cast<std::size_t>(j)],
           fx[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < height; ++i) {
    int y0 = 0;
    int y1 = 0;
    float fy = 0.0f;
    source(i, sy, x.height(), y0, y1, fy);
    for (int j = 0; j < width; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const float* a = x.pixel(y0, x0[jj]).data();
      const float* b = x.pixel(y0, x1[jj]).data();
      const float* cc = x.pixel(y1, x0[jj]).data();
      const float* d = x.pixel(y1, x1[jj]).data();
      float* dst = y.pixel(i, j).data();
      const float wx = fx[jj];
      for (std::size_t k = 0; k < c; ++k) {
        const float top = a[k] + (b[k] - a[k]) * wx;
        const float bottom = cc[k] + (d[k] - cc[k]) * wx;
        dst[k] = top + (bottom - top) * fy;
      }
    }
  }
  return y;
}

void add_inplace(Tensor3& a, const Tensor3& b) {
  if (!a.same_shape(b)) {
    throw DimensionError("add: shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
  float* pa = a.data();
  const float* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
  Tensor3 out = a;
  add_inplace(out, b);
  return out;
}

Tensor3 concat_channels(std::span<const Tensor3> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  int channels = 0;
  for (const Tensor3& p : parts) {
    if (p.height() != parts[0].height() || p.width() != parts[0].width()) {
      throw DimensionError("concat: spatial mismatch " + shape_of(p) + " vs " + shape_of(parts[0]));
    }
    channels += p.channels();
  }
  Tensor3 out(parts[0].height(), parts[0].width(), channels);
  const auto total = static_cast<std::size_t>(channels);
  std::size_t offset = 0;
  for (const Tensor3& p : parts) {
    const auto pc = static_cast<std::size_t>(p.channels());
    for (std::size_t i = 0; i < p.pixels(); ++i) {
      std::copy_n(p.data() + i * pc, pc, out.data() + i * total + offset);
    }
    offset += pc;
  }
  return out;
}

Tensor3 patch_merge(const Tensor3& x, int s) {
  if (s < 1 || x.height() % s != 0 || x.width() % s != 0) {
    throw DimensionError("patch_merge: " + shape_of(x) + " not divisible by " + std::to_string(s));
  }
  const int c = x.channels();
  Tensor3 y(x.height() / s, x.width() / s, s * s * c);
  for (int i = 0; i < y.height(); ++i) {
    for (int j = 0; j < y.width(); ++j) {
      float* dst = y.pixel(i, j).data();
      for (int dy = 0; dy < s; ++dy) {
        for (int dx = 0; dx < s; ++dx) {
          std::copy_n(x.pixel(i * s + dy, j * s + dx).data(), c,
                      dst + static_cast<std::size_t>((dy * s + dx) * c));
        }
      }
    }
  }
  return y;
}

int default_heads(int channels) {
  int heads = std::max(1, channels / 64);
  while (channels % heads != 0) --heads;
  return heads;
}

namespace {

int reduction_side(int reduction) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(reduction))));
  if (reduction < 1 || side * side != reduction) {
    throw DimensionError("attention: reduction " + std::to_string(reduction) +
                         " is not a perfect square");
  }
  return side;
}

}  // namespace

Attention Attention::make(int channels, int heads, int reduction, Init& init) {
  if (heads < 1 || channels % heads != 0) {
    throw DimensionError("attention: " + std::to_string(channels) + " channels not divisible into " +
                         std::to_string(heads) + " heads");
  }
  const int side = reduction_side(reduction);
  Attention a;
  a.channels = channels;
  a.heads = heads;
  a.reduction = reduction;
  a.q = Linear::make(channels, channels, init);
  a.k = Linear::make(channels, channels, init);
  a.v = Linear::make(channels, channels, init);
  a.proj = Linear::make(channels, channels, init);
  if (reduction > 1) {
    a.sr = Linear::make(side * side * channels, channels, init);
    a.sr_norm = LayerNorm::make(channels);
  }
  return a;
}

int Attention::key_count(int height, int width) const {
  const int side = reduction_side(reduction);
  if (height % side != 0 || width % side != 0) {
    throw DimensionError("attention: " + std::to_string(height) + "x" + std::to_string(width) +
                         " grid not divisible by reduction side " + std::to_string(side));
  }
  return (height / side) * (width / side);
}

Tensor3 Attention::operator()(const Tensor3& query, const Tensor3& kv) const {
  require_channels(query, channels, "attention query");
  require_channels(kv, channels, "attention key/value");
  if (query.height() != kv.height() || query.width() != kv.width()) {
    throw DimensionError("attention: query " + shape_of(query) + " and key/value " + shape_of(kv) +
                         " differ spatially");
  }
  const int side = reduction_side(reduction);
  key_count(kv.height(), kv.width());

  const Tensor3 qm = q(query);
  Tensor3 reduced;
  const Tensor3* source = &kv;
  if (reduction > 1) {
    reduced = (*sr_norm)((*sr)(patch_merge(kv, side)));
    source = &reduced;
  }
  const Tensor3 km = k(*source);
  const Tensor3 vm = v(*source);

  const std::size_t n = qm.pixels();
  const std::size_t m = km.pixels();
  const auto c = static_cast<std::size_t>(channels);
  const auto dh = static_cast<std::size_t>(channels / heads);
  const float scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(dh)));

  Tensor3 out(query.height(), query.width(), channels);
  std::vector<float> kt(dh * m);
  const std::size_t chunk = std::max<std::size_t>(1, kScratchFloats / m);
  std::vector<float> scores(std::min(chunk, n) * m);
  std::vector<float> qs(std::min(chunk, n) * dh);
  for (int h = 0; h < heads; ++h) {
    const std::size_t off = static_cast<std::size_t>(h) * dh;
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t d = 0; d < dh; ++d) kt[d * m + j] = km.data()[j * c + off + d];
    }
    for (std::size_t start = 0; start < n; start += chunk) {
      const std::size_t rows = std::min(chunk, n - start);
      for (std::size_t i = 0; i < rows; ++i) {
        const float* src = qm.data() + (start + i) * c + off;
        for (std::size_t d = 0; d < dh; ++d) qs[i * dh + d] = src[d] * scale;
      }
      kernels().gemm(rows, m, dh, qs.data(), dh, kt.data(), m, scores.data(), m, false);
      for (std::size_t i = 0; i < rows; ++i) {
        float* row = scores.data() + i * m;
        const float peak = *std::max_element(row, row + m);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
          row[j] = std::exp(row[j] - peak);
          total += row[j];
        }
        const float inv = static_cast<float>(1.0 / total);
        for (std::size_t j = 0; j < m; ++j) row[j] *= inv;
      }
      kernels().gemm(rows, dh, m, scores.data(), m, vm.data() + off, c,
                     out.data() + start * c + off, c, false);
    }
  }
  return proj(out);
}

Mlp Mlp::make(int channels, int hidden, Init& init) {
  return {Linear::make(channels, hidden, init), Linear::make(hidden, channels, init)};
}

Tensor3 Mlp::operator()(const Tensor3& x) const {
  Tensor3 h = fc1(x);
  gelu_inplace(h);
  return fc2(h);
}

MixFfn MixFfn::make(int channels, int hidden, Init& init) {
  Linear fc1 = Linear::make(channels, hidden, init);
  DepthwiseConv3 dw = DepthwiseConv3::make(hidden, init);
  Linear fc2 = Linear::make(hidden, channels, init);
  return {std::move(fc1), std::move(dw), std::move(fc2)};
}

Tensor3 MixFfn::operator()(const Tensor3& x) const {
  Tensor3 h = dw(fc1(x));
  gelu_inplace(h);
  return fc2(h);
}

}  // namespace mmms::nn
