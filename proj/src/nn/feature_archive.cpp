#include "mmms/nn/feature_archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "mmms/errors.hpp"

namespace mmms::nn {
namespace {

constexpr char kMagic[4] = {'M', 'M', 'F', 'T'};

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::filesystem::path feature_archive_path(const std::filesystem::path& dir,
                                           const std::string& image_id) {
  return dir / (image_id + ".mmft");
}

void write_feature_archive(const std::filesystem::path& path, const BackboneFeatures& f) {
  validate(f);
  std::vector<char> header(kMagic, kMagic + 4);
  put_u32(header, kFeatureArchiveVersion);
  put_u32(header, static_cast<std::uint32_t>(f.image_height));
  put_u32(header, static_cast<std::uint32_t>(f.image_width));
  put_u32(header, static_cast<std::uint32_t>(f.patch));
  put_u32(header, static_cast<std::uint32_t>(f.dim));
  put_u32(header, static_cast<std::uint32_t>(f.taps.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write feature archive " + path.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Tensor3& t : f.taps) {
    if constexpr (std::endian::native == std::endian::little) {
      out.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(float)));
    } else {
      std::vector<char> bytes;
      bytes.reserve(t.size() * 4);
      for (float v : t.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
  }
  if (!out) throw DatasetError("failed writing feature archive " + path.string());
}

BackboneFeatures read_feature_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("feature archive not found: " + path.string());
  unsigned char header[28];
  if (!in.read(reinterpret_cast<char*>(header), sizeof header)) {
    throw DatasetError("feature archive truncated header: " + path.string());
  }
  if (std::memcmp(header, kMagic, 4) != 0) {
    throw DatasetError("not a feature archive (bad magic): " + path.string());
  }
  const std::uint32_t version = get_u32(header + 4);
  if (version != kFeatureArchiveVersion) {
    throw DatasetError("feature archive version " + std::to_string(version) + " unsupported: " +
                       path.string());
  }
  BackboneFeatures f;
  f.image_height = static_cast<int>(get_u32(header + 8));
  f.image_width = static_cast<int>(get_u32(header + 12));
  f.patch = static_cast<int>(get_u32(header + 16));
  f.dim = static_cast<int>(get_u32(header + 20));
  const std::uint32_t taps = get_u32(header + 24);
  if (f.patch < 1 || f.dim < 1 || f.image_height < f.patch || f.image_width < f.patch ||
      taps != 4 || f.dim > (1 << 16) || f.image_height > (1 << 16) || f.image_width > (1 << 16)) {
    throw DatasetError("feature archive header out of range: " + path.string());
  }
  const int h = f.image_height / f.patch;
  const int w = f.image_width / f.patch;
  for (std::uint32_t t = 0; t < taps; ++t) {
    Tensor3 tap(h, w, f.dim);
    std::vector<unsigned char> bytes(tap.size() * 4);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
      throw DatasetError("feature archive truncated: " + path.string());
    }
    for (std::size_t i = 0; i < tap.size(); ++i) {
      tap.data()[i] = std::bit_cast<float>(get_u32(bytes.data() + 4 * i));
    }
    f.taps.push_back(std::move(tap));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DatasetError("feature archive has trailing bytes: " + path.string());
  }
  validate(f);
  return f;
}

}  // namespace mmms::nn
