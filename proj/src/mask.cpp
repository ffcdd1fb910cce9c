#include "mmms/mask.hpp"

#include <algorithm>
#include <string>

#include "mmms/errors.hpp"
#include "mmms/simd/kernels.hpp"

namespace mmms {
namespace {

void check_dims(int height, int width, const char* what) {
  if (height < 1 || width < 1) {
    throw DimensionError(std::string(what) + ": dimensions must be positive, got " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
}

std::size_t area(int height, int width) {
  return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

void check_surface(const JointMask& joint, int surface, const char* what) {
  if (surface < 1 || surface > joint.surface_count()) {
    throw DimensionError(std::string(what) + ": surface id " + std::to_string(surface) +
                         " outside [1, " + std::to_string(joint.surface_count()) + "]");
  }
}

void check_joint_shape(const JointMask& joint, const BinaryMask& mask, const char* what) {
  if (joint.height() != mask.height() || joint.width() != mask.width()) {
    throw DimensionError(std::string(what) + ": joint mask is " + std::to_string(joint.height()) +
                         "x" + std::to_string(joint.width()) + ", mask is " +
                         std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
  }
}

}  // namespace

BinaryMask::BinaryMask(int height, int width) : height_(height), width_(width) {
  check_dims(height, width, "BinaryMask");
  bits_.assign(area(height, width), 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  check_dims(height, width, "BinaryMask");
  if (bits_.size() != area(height, width)) {
    throw DimensionError("BinaryMask: " + std::to_string(bits_.size()) + " bits for " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  for (auto& b : bits_) b = b != 0 ? 1 : 0;
}

BinaryMask BinaryMask::full(int height, int width) {
  BinaryMask m(height, width);
  std::fill(m.bits_.begin(), m.bits_.end(), std::uint8_t{1});
  return m;
}

std::size_t BinaryMask::count() const noexcept {
  if (bits_.empty()) return 0;
  return static_cast<std::size_t>(
      simd::active_kernels().overlap(bits_.data(), bits_.data(), bits_.size()).intersection);
}

JointMask::JointMask(int height, int width, int surface_count)
    : height_(height), width_(width), surface_count_(surface_count) {
  check_dims(height, width, "JointMask");
  if (surface_count < 0 || surface_count > 65535) {
    throw DimensionError("JointMask: surface count " + std::to_string(surface_count) +
                         " outside [0, 65535]");
  }
  labels_.assign(area(height, width), 0);
}

JointMask::JointMask(int height, int width, int surface_count, std::vector<SurfaceLabel> labels)
    : JointMask(height, width, surface_count) {
  if (labels.size() != labels_.size()) {
    throw DimensionError("JointMask: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  for (SurfaceLabel l : labels) {
    if (l > surface_count) {
      throw DimensionError("JointMask: label " + std::to_string(l) + " exceeds surface count " +
                           std::to_string(surface_count));
    }
  }
  labels_ = std::move(labels);
}

void require_same_shape(const BinaryMask& a, const BinaryMask& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) +
                         "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                         "x" + std::to_string(b.width()));
  }
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "iou");
  const auto counts = simd::active_kernels().overlap(a.bits().data(), b.bits().data(), a.size());
  if (counts.union_ == 0) return 100.0;
  return static_cast<double>(counts.intersection) / static_cast<double>(counts.union_) * 100.0;
}

ClickMaps encode_clicks(std::span<const Click> clicks, int height, int width, int radius) {
  if (radius < 0) throw DimensionError("encode_clicks: negative radius");
  ClickMaps maps{BinaryMask(height, width), BinaryMask(height, width), radius};
  const long long r2 = static_cast<long long>(radius) * radius;
  for (const Click& click : clicks) {
    if (!maps.positive.contains(click.row, click.col)) {
      throw DimensionError("encode_clicks: click (" + std::to_string(click.row) + ", " +
                           std::to_string(click.col) + ") outside " + std::to_string(height) +
                           "x" + std::to_string(width));
    }
    BinaryMask& target = click.positive() ? maps.positive : maps.negative;
    const int r0 = std::max(0, click.row - radius);
    const int r1 = std::min(height - 1, click.row + radius);
    const int c0 = std::max(0, click.col - radius);
    const int c1 = std::min(width - 1, click.col + radius);
    for (int r = r0; r <= r1; ++r) {
      const long long dr = r - click.row;
      for (int c = c0; c <= c1; ++c) {
        const long long dc = c - click.col;
        if (dr * dr + dc * dc <= r2) target.set(r, c);
      }
    }
  }
  return maps;
}

InteractionTensor assemble_interaction(std::span<const Click> clicks, const BinaryMask& prev_mask,
                                       int radius) {
  const ClickMaps maps = encode_clicks(clicks, prev_mask.height(), prev_mask.width(), radius);
  InteractionTensor out{Tensor3(prev_mask.height(), prev_mask.width(), 3)};
  float* dst = out.planes.data();
  const auto pos = maps.positive.bits();
  const auto neg = maps.negative.bits();
  const auto prev = prev_mask.bits();
  for (std::size_t i = 0; i < prev.size(); ++i) {
    dst[3 * i + 0] = pos[i];
    dst[3 * i + 1] = neg[i];
    dst[3 * i + 2] = prev[i];
  }
  return out;
}

JointMask joint_insert_classical(const JointMask& joint, int surface, const BinaryMask& mask) {
  check_surface(joint, surface, "joint_insert_classical");
  check_joint_shape(joint, mask, "joint_insert_classical");
  JointMask out = joint;
  const auto bits = mask.bits();
  const auto k = static_cast<SurfaceLabel>(surface);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out.labels_[i] = k;
  }
  return out;
}

JointMask joint_insert_revisit(const JointMask& joint, int surface, const BinaryMask& mask) {
  check_surface(joint, surface, "joint_insert_revisit");
  check_joint_shape(joint, mask, "joint_insert_revisit");
  JointMask out = joint;
  const auto bits = mask.bits();
  const auto k = static_cast<SurfaceLabel>(surface);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) {
      out.labels_[i] = k;
    } else if (out.labels_[i] == k) {
      out.labels_[i] = 0;
    }
  }
  return out;
}

BinaryMask joint_extract(const JointMask& joint, int surface) {
  check_surface(joint, surface, "joint_extract");
  BinaryMask out(joint.height(), joint.width());
  const auto labels = joint.labels();
  auto bits = out.bits();
  const auto k = static_cast<SurfaceLabel>(surface);
  for (std::size_t i = 0; i < labels.size(); ++i) bits[i] = labels[i] == k ? 1 : 0;
  return out;
}

}  // namespace mmms
