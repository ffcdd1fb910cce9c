#pragma once

// Feature archive file, one per image:
//   "MMFT" | u32 version | u32 H | u32 W | u32 P | u32 d | u32 taps
//   | taps × (H/P)·(W/P)·d float32, channels-last
// All integers and floats little-endian.

#include <cstdint>
#include <filesystem>
#include <string>

#include "mmms/nn/backbone.hpp"

namespace mmms::nn {

inline constexpr std::uint32_t kFeatureArchiveVersion = 1;

std::filesystem::path feature_archive_path(const std::filesystem::path& dir,
                                           const std::string& image_id);

void write_feature_archive(const std::filesystem::path& path, const BackboneFeatures& features);

// Throws DatasetError on a missing, truncated, or malformed file.
BackboneFeatures read_feature_archive(const std::filesystem::path& path);

}  // namespace mmms::nn
