#pragma once

#include <cstdint>
#include <vector>

#include "mmms/mask.hpp"

namespace mmms {

// Row-major run lengths, alternating background/foreground and always
// starting with a background run (possibly of length 0).
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const BinaryMask& mask);

// Throws DimensionError when the runs do not cover exactly height*width pixels.
BinaryMask rle_decode(const RleMask& rle);

}  // namespace mmms
