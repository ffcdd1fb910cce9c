#include "mmms/nn/fpn.hpp"

#include <algorithm>
#include <sstream>

#include "mmms/errors.hpp"

namespace mmms::nn {
namespace {

FpnStep interp(int divisor) {
  FpnStep s;
  s.kind = FpnStep::Kind::interpolate;
  s.divisor = divisor;
  return s;
}

FpnStep conv(int in, int out, int kernel, Init& init) {
  FpnStep s;
  s.kind = FpnStep::Kind::conv;
  s.conv = Conv2d::same(in, out, kernel, init);
  return s;
}

FpnStep norm(int channels) {
  FpnStep s;
  s.kind = FpnStep::Kind::norm;
  s.norm = GroupNorm1::make(channels);
  return s;
}

FpnStep gelu() { return FpnStep{}; }

void check_config(const FpnConfig& c) {
  if (c.d_fm < 1 || c.patch < 1) throw ConfigError("fpn: d_fm and patch must be positive");
  for (int e : c.d_embed) {
    if (e < 1) throw ConfigError("fpn: embedding sizes must be positive");
  }
  if (c.d_hidden()[0] % 2 != 0) throw ConfigError("fpn: stride-4 hidden size must be even");
}

}  // namespace

void validate(const FeaturePyramid& p, int height, int width, const std::array<int, 4>& channels) {
  for (std::size_t i = 0; i < 4; ++i) {
    const int s = kPyramidStrides[i];
    const Tensor3& t = p.levels[i];
    if (t.height() != height / s || t.width() != width / s || t.channels() != channels[i]) {
      throw DimensionError("pyramid level /" + std::to_string(s) + " is " +
                           std::to_string(t.height()) + "x" + std::to_string(t.width()) + "x" +
                           std::to_string(t.channels()) + ", expected " +
                           std::to_string(height / s) + "x" + std::to_string(width / s) + "x" +
                           std::to_string(channels[i]));
    }
  }
}

std::array<int, 4> FpnConfig::d_hidden() const {
  return {std::max(2 * d_embed[0], d_fm / 2), std::max(d_embed[1], d_fm / 2),
          std::max(d_embed[2], d_fm), std::max(d_embed[3], 2 * d_fm)};
}

Tensor3 ScaleModule::operator()(const Tensor3& x, int height, int width) const {
  Tensor3 t = x;
  for (const FpnStep& s : steps) {
    switch (s.kind) {
      case FpnStep::Kind::interpolate:
        if (height % s.divisor != 0 || width % s.divisor != 0) {
          throw DimensionError("fpn: " + std::to_string(height) + "x" + std::to_string(width) +
                               " not divisible by " + std::to_string(s.divisor));
        }
        t = resize_bilinear(t, height / s.divisor, width / s.divisor);
        break;
      case FpnStep::Kind::conv:
        t = s.conv(t);
        break;
      case FpnStep::Kind::norm:
        t = s.norm(t);
        break;
      case FpnStep::Kind::gelu:
        gelu_inplace(t);
        break;
    }
  }
  return t;
}

std::string ScaleModule::describe() const {
  std::ostringstream ss;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const FpnStep& s = steps[i];
    if (i) ss << ' ';
    switch (s.kind) {
      case FpnStep::Kind::interpolate: ss << "interp(/" << s.divisor << ")"; break;
      case FpnStep::Kind::conv:
        ss << "conv(" << s.conv.in << "->" << s.conv.out << ",k" << s.conv.kernel << ")";
        break;
      case FpnStep::Kind::norm: ss << "gn(" << s.norm.channels << ")"; break;
      case FpnStep::Kind::gelu: ss << "gelu"; break;
    }
  }
  return ss.str();
}

ParallelFpn::ParallelFpn(const FpnConfig& config, Init& init) : config_(config) {
  check_config(config_);
  const int d = config_.d_fm;
  const auto e = config_.d_embed;
  const auto h = config_.d_hidden();
  // The 1×1 convolution of the stride-4 module reads the h[0]/2 channels the
  // preceding normalization produces.
  scales_[0].steps = {interp(8),      conv(d, h[0], 3, init), norm(h[0]), gelu(),
                      interp(4),      conv(h[0], h[0] / 2, 3, init), norm(h[0] / 2),
                      conv(h[0] / 2, e[0], 1, init), norm(e[0]), gelu()};
  scales_[1].steps = {interp(8), conv(d, h[1], 3, init), norm(h[1]),
                      conv(h[1], e[1], 1, init), norm(e[1]), gelu()};
  scales_[2].steps = {conv(d, h[2], 3, init), interp(16), norm(h[2]),
                      conv(h[2], e[2], 1, init), norm(e[2]), gelu()};
  scales_[3].steps = {conv(d, h[3], 3, init), interp(32), norm(h[3]),
                      conv(h[3], e[3], 1, init), norm(e[3]), gelu()};
}

FeaturePyramid ParallelFpn::operator()(const BackboneFeatures& f) const {
  validate(f);
  if (f.dim != config_.d_fm || f.patch != config_.patch) {
    throw DimensionError("fpn: configured for d=" + std::to_string(config_.d_fm) + " P=" +
                         std::to_string(config_.patch) + ", got d=" + std::to_string(f.dim) +
                         " P=" + std::to_string(f.patch));
  }
  FeaturePyramid p;
  for (std::size_t i = 0; i < 4; ++i) {
    p.levels[i] = scales_[i](f.taps[i], f.image_height, f.image_width);
  }
  validate(p, f.image_height, f.image_width, config_.d_embed);
  return p;
}

InverseParallelFpn::InverseParallelFpn(const FpnConfig& config, Init& init) : config_(config) {
  check_config(config_);
  const int d = config_.d_fm;
  const int pm = config_.patch;
  const auto e = config_.d_embed;
  const auto h = config_.d_hidden();
  scales_[0].steps = {interp(8),      conv(e[0], h[0] / 2, 3, init), norm(h[0] / 2), gelu(),
                      interp(pm),     conv(h[0] / 2, h[0], 3, init), norm(h[0]),
                      conv(h[0], d, 1, init), norm(d), gelu()};
  scales_[1].steps = {interp(pm), conv(e[1], h[1], 3, init), norm(h[1]),
                      conv(h[1], d, 1, init), norm(d), gelu()};
  scales_[2].steps = {conv(e[2], h[2], 3, init), interp(pm), norm(h[2]),
                      conv(h[2], d, 1, init), norm(d), gelu()};
  scales_[3].steps = {interp(pm), conv(e[3], h[3], 3, init), norm(h[3]),
                      conv(h[3], d, 1, init), norm(d), gelu()};
}

BackboneFeatures InverseParallelFpn::operator()(const FeaturePyramid& p, int height,
                                                int width) const {
  validate(p, height, width, config_.d_embed);
  BackboneFeatures out{height, width, config_.patch, config_.d_fm, {}};
  for (std::size_t i = 0; i < 4; ++i) out.taps.push_back(scales_[i](p.levels[i], height, width));
  validate(out);
  return out;
}

}  // namespace mmms::nn
