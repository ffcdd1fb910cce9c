#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace mmms {

// Decoded PNG samples. Palette images keep their raw indices (channels == 1),
// which is how joint ground truth is stored.
struct Raster {
  int height = 0;
  int width = 0;
  int channels = 0;   // 1 (gray / palette index) or 3 (RGB)
  int bit_depth = 8;  // 8 or 16
  bool palette = false;
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels

  std::uint16_t at(int row, int col, int channel = 0) const {
    return samples[(static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                    static_cast<std::size_t>(col)) *
                       static_cast<std::size_t>(channels) +
                   static_cast<std::size_t>(channel)];
  }
};

// Throws DatasetError on unreadable or unsupported files.
Raster read_png(const std::filesystem::path& path);

// Writes gray, RGB, or (palette == true, 8-bit, 1 channel) indexed PNG.
void write_png(const std::filesystem::path& path, const Raster& raster);

}  // namespace mmms
