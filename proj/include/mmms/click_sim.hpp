#pragma once

// Automatic click placement: find the largest misclassified region and click
// its deepest interior point.

#include <cstdint>
#include <optional>
#include <vector>

#include "mmms/mask.hpp"

namespace mmms {

// One 4-connected region. Pixels are linear row-major indices in ascending
// order, so pixels.front() is the region's top-left pixel.
struct Component {
  std::vector<std::uint32_t> pixels;

  std::size_t area() const noexcept { return pixels.size(); }
};

// Components ordered by their first pixel in row-major order.
std::vector<Component> connected_components(const BinaryMask& mask);

struct DistanceMap {
  int height = 0;
  int width = 0;
  // Squared Euclidean distance to the nearest pixel outside the region;
  // 0 for pixels outside it.
  std::vector<std::int64_t> squared;

  double at(int row, int col) const;
};

// Exact Euclidean distance transform of a region with respect to its
// complement. Pixels beyond the image border count as complement.
DistanceMap distance_to_complement(const Component& component, int height, int width);
DistanceMap distance_to_complement(const BinaryMask& region);

struct ErrorAnalysis {
  std::vector<Component> false_negative_regions;
  std::vector<Component> false_positive_regions;
};

ErrorAnalysis analyze_errors(const BinaryMask& pred, const BinaryMask& gt);

// nullopt iff pred == gt. Otherwise picks the largest error region (ties: the
// region whose top-left pixel comes first in row-major order) and returns its
// pixel farthest from the region's complement (ties: first in row-major
// order). Positive for missed foreground, negative for false foreground.
std::optional<Click> next_click(const BinaryMask& pred, const BinaryMask& gt);

}  // namespace mmms
