#pragma once

// Binary and joint masks, click encoding, and the joint-mask update rules
// used when several surfaces of one image share a single label grid.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mmms/tensor.hpp"

namespace mmms {

enum class Polarity : std::uint8_t { positive, negative };

struct Click {
  int row = 0;
  int col = 0;
  Polarity polarity = Polarity::positive;

  bool positive() const noexcept { return polarity == Polarity::positive; }
  friend bool operator==(const Click&, const Click&) = default;
};

// H×W grid of 0/1 bytes, row-major.
class BinaryMask {
 public:
  BinaryMask() = default;
  BinaryMask(int height, int width);
  BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

  static BinaryMask full(int height, int width);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool test(int row, int col) const noexcept { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool value = true) noexcept {
    bits_[index(row, col)] = value ? 1 : 0;
  }
  bool contains(int row, int col) const noexcept {
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  // Writers must keep every byte at 0 or 1.
  std::span<std::uint8_t> bits() noexcept { return bits_; }

  std::size_t count() const noexcept;
  bool none() const noexcept { return count() == 0; }
  bool same_shape(const BinaryMask& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int row, int col) const noexcept {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(col);
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

using SurfaceLabel = std::uint16_t;

// Label grid over {0..L}; 0 is background, k ∈ [1, L] is surface k.
class JointMask {
 public:
  JointMask() = default;
  JointMask(int height, int width, int surface_count);
  JointMask(int height, int width, int surface_count, std::vector<SurfaceLabel> labels);

  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  int surface_count() const noexcept { return surface_count_; }
  std::size_t size() const noexcept { return labels_.size(); }

  SurfaceLabel label(int row, int col) const noexcept {
    return labels_[static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) +
                   static_cast<std::size_t>(col)];
  }
  std::span<const SurfaceLabel> labels() const noexcept { return labels_; }

  friend bool operator==(const JointMask&, const JointMask&) = default;

 private:
  friend JointMask joint_insert_classical(const JointMask&, int, const BinaryMask&);
  friend JointMask joint_insert_revisit(const JointMask&, int, const BinaryMask&);

  int height_ = 0;
  int width_ = 0;
  int surface_count_ = 0;
  std::vector<SurfaceLabel> labels_;
};

struct ClickMaps {
  BinaryMask positive;
  BinaryMask negative;
  int disk_radius = 0;
};

// Planes in order: positive disks, negative disks, previous mask.
struct InteractionTensor {
  Tensor3 planes;
};

inline constexpr int kDefaultDiskRadius = 5;

// IoU in percentage points. Two empty masks score 100.
double iou(const BinaryMask& a, const BinaryMask& b);

// Pixel (r, c) is set in the polarity's map iff it lies within `radius`
// (Euclidean, inclusive) of a click of that polarity.
ClickMaps encode_clicks(std::span<const Click> clicks, int height, int width, int radius);

InteractionTensor assemble_interaction(std::span<const Click> clicks, const BinaryMask& prev_mask,
                                       int radius);

// Later insertions override earlier ones where `mask` is set.
JointMask joint_insert_classical(const JointMask& joint, int surface, const BinaryMask& mask);

// As classical, and additionally clears pixels of `surface` that `mask` no
// longer covers back to background.
JointMask joint_insert_revisit(const JointMask& joint, int surface, const BinaryMask& mask);

BinaryMask joint_extract(const JointMask& joint, int surface);

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what);

}  // namespace mmms
