#include "mmms/rle.hpp"

#include <string>

#include "mmms/errors.hpp"

namespace mmms {

RleMask rle_encode(const BinaryMask& mask) {
  RleMask out{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t bit : mask.bits()) {
    if (bit != current) {
      out.counts.push_back(run);
      current = bit;
      run = 0;
    }
    ++run;
  }
  out.counts.push_back(run);
  return out;
}

BinaryMask rle_decode(const RleMask& rle) {
  if (rle.height < 1 || rle.width < 1) {
    throw DimensionError("rle_decode: invalid dimensions " + std::to_string(rle.height) + "x" +
                         std::to_string(rle.width));
  }
  const std::uint64_t expected =
      static_cast<std::uint64_t>(rle.height) * static_cast<std::uint64_t>(rle.width);
  std::uint64_t total = 0;
  for (std::uint32_t c : rle.counts) total += c;
  if (total != expected) {
    throw DimensionError("rle_decode: counts sum to " + std::to_string(total) + ", expected " +
                         std::to_string(expected));
  }
  std::vector<std::uint8_t> bits;
  bits.reserve(expected);
  std::uint8_t value = 0;
  for (std::uint32_t c : rle.counts) {
    bits.insert(bits.end(), c, value);
    value ^= 1;
  }
  return BinaryMask(rle.height, rle.width, std::move(bits));
}

}  // namespace mmms
