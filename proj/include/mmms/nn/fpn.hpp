#pragma once

// ParallelFPN turns the four backbone taps into a stride {4, 8, 16, 32}
// pyramid, one independent scaling module per level. InverseParallelFPN maps
// a pyramid back to backbone-shaped tensors (shape only; it is not a true
// inverse).

#include <array>
#include <string>
#include <vector>

#include "mmms/nn/backbone.hpp"
#include "mmms/nn/layers.hpp"

namespace mmms::nn {

inline constexpr std::array<int, 4> kPyramidStrides{4, 8, 16, 32};
inline constexpr std::array<int, 4> kDefaultEmbed{64, 128, 320, 512};

struct FeaturePyramid {
  std::array<Tensor3, 4> levels;

  friend bool operator==(const FeaturePyramid&, const FeaturePyramid&) = default;
};

// Throws DimensionError unless level i is (H/s_i, W/s_i, channels[i]).
void validate(const FeaturePyramid& p, int height, int width, const std::array<int, 4>& channels);

struct FpnConfig {
  int d_fm = 768;
  int patch = 16;
  std::array<int, 4> d_embed = kDefaultEmbed;

  std::array<int, 4> d_hidden() const;
};

struct FpnStep {
  enum class Kind { interpolate, conv, norm, gelu };
  Kind kind = Kind::gelu;
  int divisor = 0;  // interpolate: target is (H/divisor, W/divisor)
  Conv2d conv;
  GroupNorm1 norm;
};

struct ScaleModule {
  std::vector<FpnStep> steps;

  // H, W: image resolution the interpolation targets refer to.
  Tensor3 operator()(const Tensor3& x, int height, int width) const;
  // Human-readable step list, e.g. "interp(/8) conv(768->384,k3) gn(384) gelu ...".
  std::string describe() const;
};

class ParallelFpn {
 public:
  ParallelFpn(const FpnConfig& config, Init& init);

  FeaturePyramid operator()(const BackboneFeatures& features) const;

  const FpnConfig& config() const noexcept { return config_; }
  std::array<ScaleModule, 4>& scales() noexcept { return scales_; }
  const std::array<ScaleModule, 4>& scales() const noexcept { return scales_; }

 private:
  FpnConfig config_;
  std::array<ScaleModule, 4> scales_;
};

class InverseParallelFpn {
 public:
  InverseParallelFpn(const FpnConfig& config, Init& init);

  BackboneFeatures operator()(const FeaturePyramid& pyramid, int height, int width) const;

  const FpnConfig& config() const noexcept { return config_; }
  std::array<ScaleModule, 4>& scales() noexcept { return scales_; }

 private:
  FpnConfig config_;
  std::array<ScaleModule, 4> scales_;
};

}  // namespace mmms::nn
