#pragma once

// Data-parallel inner loops used by the mask metrics and the neural forward
// pass. Every kernel has a portable scalar reference; wider variants are
// selected once at startup from what the CPU reports. Set MMMS_SIMD=scalar
// (or avx2) in the environment to force a variant.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace mmms::simd {

struct OverlapCounts {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};

struct KernelTable {
  std::string_view name;

  // C[M×N] (+)= A[M×K] · B[K×N], all row-major with the given leading
  // dimensions. When accumulate is false C is overwritten.
  void (*gemm)(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
               const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate);

  // |a ∧ b| and |a ∨ b| over two 0/1 byte arrays.
  OverlapCounts (*overlap)(const std::uint8_t* a, const std::uint8_t* b, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(std::size_t n, float alpha, const float* x, float* y);

  // Sum and sum of squares in double precision (normalization statistics).
  void (*moments)(const float* x, std::size_t n, double* sum, double* sum_sq);
};

const KernelTable& scalar_kernels();

// nullptr when the build or the running CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table used by the library; resolved on first call.
const KernelTable& active_kernels();

}  // namespace mmms::simd
