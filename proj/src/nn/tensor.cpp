#include "mmms/tensor.hpp"

#include <string>

#include "mmms/errors.hpp"

namespace mmms {

Tensor3::Tensor3(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 1 || width < 1 || channels < 1) {
    throw DimensionError("Tensor3: dimensions must be positive, got " + std::to_string(height) +
                         "x" + std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(pixels() * static_cast<std::size_t>(channels), fill);
}

}  // namespace mmms
