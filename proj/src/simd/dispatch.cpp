#include <cstdlib>
#include <string_view>

#include "mmms/simd/kernels.hpp"

namespace mmms::simd {

const KernelTable* avx2_table_unchecked();

namespace {

bool cpu_has_avx2_fma() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& resolve() {
  const KernelTable* wide = avx2_kernels();
  if (const char* forced = std::getenv("MMMS_SIMD")) {
    const std::string_view want{forced};
    if (want == "scalar") return scalar_kernels();
    if (want == "avx2" && wide != nullptr) return *wide;
  }
  return wide != nullptr ? *wide : scalar_kernels();
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable* table = cpu_has_avx2_fma() ? avx2_table_unchecked() : nullptr;
  return table;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = resolve();
  return table;
}

}  // namespace mmms::simd
