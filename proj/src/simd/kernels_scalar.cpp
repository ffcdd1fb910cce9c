#include "mmms/simd/kernels.hpp"

namespace mmms::simd {
namespace {

void gemm_scalar(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
                 const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    float* crow = c + i * ldc;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0f;
    }
    const float* arow = a + i * lda;
    for (std::size_t p = 0; p < k; ++p) {
      const float av = arow[p];
      if (av == 0.0f) continue;
      const float* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

OverlapCounts overlap_scalar(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  OverlapCounts out;
  for (std::size_t i = 0; i < n; ++i) {
    out.intersection += static_cast<std::uint64_t>(a[i] & b[i]);
    out.union_ += static_cast<std::uint64_t>(a[i] | b[i]);
  }
  return out;
}

void axpy_scalar(std::size_t n, float alpha, const float* x, float* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void moments_scalar(const float* x, std::size_t n, double* sum, double* sum_sq) {
  double s = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[i];
    s += v;
    s2 += v * v;
  }
  *sum = s;
  *sum_sq = s2;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", gemm_scalar, overlap_scalar, axpy_scalar, moments_scalar};
  return table;
}

}  // namespace mmms::simd
