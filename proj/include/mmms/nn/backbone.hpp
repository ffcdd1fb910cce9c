#pragma once

// Frozen RGB feature extractor seen as a black box: four equally shaped
// (H/P, W/P, d) feature maps tapped at evenly spaced transformer depths.
// Either computed in-process by a seeded stub transformer, or read back from
// a feature archive written by an earlier bulk extraction.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mmms/nn/layers.hpp"
#include "mmms/tensor.hpp"

namespace mmms::nn {

struct BackboneFeatures {
  int image_height = 0;
  int image_width = 0;
  int patch = 0;
  int dim = 0;
  std::vector<Tensor3> taps;

  friend bool operator==(const BackboneFeatures&, const BackboneFeatures&) = default;
};

// Throws DimensionError unless there are four taps of shape (H/P, W/P, d).
void validate(const BackboneFeatures& features);

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;

  virtual std::string describe() const = 0;
  virtual int patch() const = 0;
  virtual int dim() const = 0;

  // `rgb` is the image at the working resolution.
  BackboneFeatures extract(const std::string& image_id, const Tensor3& rgb) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_extract(image_id, rgb);
  }
  long calls() const noexcept { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual BackboneFeatures do_extract(const std::string& image_id, const Tensor3& rgb) const = 0;

 private:
  mutable std::atomic<long> calls_{0};
};

struct BackboneConfig {
  int patch = 16;
  int dim = 768;
  int depth = 12;
  std::vector<int> taps;  // 1-based block indices; empty picks depth/4, depth/2, 3·depth/4, depth
  int heads = 0;          // 0 picks dim/64
  double mlp_ratio = 1.0;
  std::uint64_t seed = 0;

  std::vector<int> resolved_taps() const;
};

class StubBackbone final : public FeatureProvider {
 public:
  explicit StubBackbone(BackboneConfig config);

  std::string describe() const override;
  int patch() const override { return config_.patch; }
  int dim() const override { return config_.dim; }
  const BackboneConfig& config() const noexcept { return config_; }

  BackboneFeatures forward(const Tensor3& rgb) const;

 protected:
  BackboneFeatures do_extract(const std::string& image_id, const Tensor3& rgb) const override;

 private:
  struct Block {
    LayerNorm ln1;
    Attention attn;
    LayerNorm ln2;
    Mlp mlp;
  };

  BackboneConfig config_;
  std::vector<int> taps_;
  Conv2d patchify_;
  std::vector<Block> blocks_;
};

// Reads <dir>/<image id>.mmft.
class ArchiveBackbone final : public FeatureProvider {
 public:
  ArchiveBackbone(std::filesystem::path dir, int patch, int dim);

  std::string describe() const override;
  int patch() const override { return patch_; }
  int dim() const override { return dim_; }

 protected:
  BackboneFeatures do_extract(const std::string& image_id, const Tensor3& rgb) const override;

 private:
  std::filesystem::path dir_;
  int patch_;
  int dim_;
};

}  // namespace mmms::nn
