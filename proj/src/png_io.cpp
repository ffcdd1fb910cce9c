#include "mmms/png_io.hpp"

#include <png.h>

#include <array>
#include <cstdio>
#include <memory>
#include <string>

#include "mmms/errors.hpp"

namespace mmms {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DatasetError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  (void)png;
  throw DatasetError(std::string("png: ") + msg);
}

void png_warn(png_structp, png_const_charp) {}

// Distinct, stable colors for label indices so indexed ground truth is
// viewable in ordinary image tools.
std::array<png_color, 256> label_palette() {
  std::array<png_color, 256> pal{};
  pal[0] = {0, 0, 0};
  for (int i = 1; i < 256; ++i) {
    const unsigned h = static_cast<unsigned>(i) * 2654435761u;
    pal[static_cast<std::size_t>(i)] = {static_cast<png_byte>(64 + (h >> 8) % 192),
                                        static_cast<png_byte>(64 + (h >> 16) % 192),
                                        static_cast<png_byte>(64 + (h >> 24) % 192)};
  }
  return pal;
}

}  // namespace

Raster read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw DatasetError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw DatasetError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  Raster out;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth < 8) png_set_packing(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (depth == 16) png_set_swap(png);  // host little-endian samples
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = depth == 16 ? 16 : 8;
    out.palette = color == PNG_COLOR_TYPE_PALETTE;
    out.channels = static_cast<int>(png_get_channels(png, info));
    if (out.channels != 1 && out.channels != 3) {
      throw DatasetError("unsupported channel count " + std::to_string(out.channels));
    }
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<png_byte> buffer(rowbytes * static_cast<std::size_t>(out.height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
    for (int r = 0; r < out.height; ++r) rows[static_cast<std::size_t>(r)] = buffer.data() + rowbytes * static_cast<std::size_t>(r);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    const std::size_t n = static_cast<std::size_t>(out.width) * static_cast<std::size_t>(out.height) *
                          static_cast<std::size_t>(out.channels);
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (out.bit_depth == 16) {
        out.samples[i] = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
      } else {
        out.samples[i] = buffer[i];
      }
    }
  } catch (const DatasetError& e) {
    throw DatasetError(path.string() + ": " + e.what());
  }
  return out;
}

void write_png(const std::filesystem::path& path, const Raster& raster) {
  if (raster.palette && (raster.channels != 1 || raster.bit_depth != 8)) {
    throw DatasetError("indexed PNG must be 8-bit single channel");
  }
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (png == nullptr) throw DatasetError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  const int color = raster.palette ? PNG_COLOR_TYPE_PALETTE
                    : raster.channels == 3 ? PNG_COLOR_TYPE_RGB
                                           : PNG_COLOR_TYPE_GRAY;
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width),
               static_cast<png_uint_32>(raster.height), raster.bit_depth, color,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  const auto palette = label_palette();
  if (raster.palette) png_set_PLTE(png, info, palette.data(), 256);
  // No timestamps or text chunks: identical rasters give identical files.
  png_write_info(png, info);

  const std::size_t per_row = static_cast<std::size_t>(raster.width) *
                              static_cast<std::size_t>(raster.channels);
  const std::size_t bytes = raster.bit_depth == 16 ? 2 : 1;
  std::vector<png_byte> row(per_row * bytes);
  for (int r = 0; r < raster.height; ++r) {
    const std::uint16_t* src = raster.samples.data() + per_row * static_cast<std::size_t>(r);
    for (std::size_t i = 0; i < per_row; ++i) {
      if (bytes == 2) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);  // PNG is big-endian
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace mmms
