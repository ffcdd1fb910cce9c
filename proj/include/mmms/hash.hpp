#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace mmms {

// FNV-1a, 64-bit. Used for fingerprints and determinism checks, not security.
class Fnv1a {
 public:
  Fnv1a& update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ull;
    }
    return *this;
  }
  Fnv1a& update(const void* data, std::size_t n) noexcept {
    return update(std::string_view(static_cast<const char*>(data), n));
  }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace mmms
