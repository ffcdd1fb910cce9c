#include "mmms/simd/kernels.hpp"

#if defined(MMMS_HAVE_AVX2_TU)

#include <immintrin.h>

#include <algorithm>
#include <vector>

namespace mmms::simd {
namespace {

constexpr std::size_t kMr = 6;
constexpr std::size_t kNr = 16;
constexpr std::size_t kKc = 256;
constexpr std::size_t kNc = 2048;

// Packs a kc×nc block of B into column panels of kNr floats per k step,
// zero-padding the last panel.
void pack_b(std::size_t kc, std::size_t nc, const float* b, std::size_t ldb, float* out) {
  for (std::size_t jp = 0; jp < nc; jp += kNr) {
    const std::size_t nr = std::min(kNr, nc - jp);
    for (std::size_t p = 0; p < kc; ++p) {
      const float* src = b + p * ldb + jp;
      float* dst = out + p * kNr;
      if (nr == kNr) {
        _mm256_storeu_ps(dst, _mm256_loadu_ps(src));
        _mm256_storeu_ps(dst + 8, _mm256_loadu_ps(src + 8));
      } else {
        std::size_t j = 0;
        for (; j < nr; ++j) dst[j] = src[j];
        for (; j < kNr; ++j) dst[j] = 0.0f;
      }
    }
    out += kc * kNr;
  }
}

template <std::size_t R>
void micro_kernel(std::size_t kc, const float* a, std::size_t lda, const float* bp, float* c,
                  std::size_t ldc, std::size_t nr, bool add) {
  __m256 acc[R][2];
  for (std::size_t i = 0; i < R; ++i) {
    acc[i][0] = _mm256_setzero_ps();
    acc[i][1] = _mm256_setzero_ps();
  }
  for (std::size_t p = 0; p < kc; ++p) {
    const __m256 b0 = _mm256_loadu_ps(bp + p * kNr);
    const __m256 b1 = _mm256_loadu_ps(bp + p * kNr + 8);
    for (std::size_t i = 0; i < R; ++i) {
      const __m256 av = _mm256_broadcast_ss(a + i * lda + p);
      acc[i][0] = _mm256_fmadd_ps(av, b0, acc[i][0]);
      acc[i][1] = _mm256_fmadd_ps(av, b1, acc[i][1]);
    }
  }
  for (std::size_t i = 0; i < R; ++i) {
    float* crow = c + i * ldc;
    if (nr == kNr) {
      if (add) {
        acc[i][0] = _mm256_add_ps(acc[i][0], _mm256_loadu_ps(crow));
        acc[i][1] = _mm256_add_ps(acc[i][1], _mm256_loadu_ps(crow + 8));
      }
      _mm256_storeu_ps(crow, acc[i][0]);
      _mm256_storeu_ps(crow + 8, acc[i][1]);
    } else {
      alignas(32) float tmp[kNr];
      _mm256_store_ps(tmp, acc[i][0]);
      _mm256_store_ps(tmp + 8, acc[i][1]);
      for (std::size_t j = 0; j < nr; ++j) crow[j] = add ? crow[j] + tmp[j] : tmp[j];
    }
  }
}

void run_micro(std::size_t mr, std::size_t kc, const float* a, std::size_t lda, const float* bp,
               float* c, std::size_t ldc, std::size_t nr, bool add) {
  switch (mr) {
    case 6: micro_kernel<6>(kc, a, lda, bp, c, ldc, nr, add); break;
    case 5: micro_kernel<5>(kc, a, lda, bp, c, ldc, nr, add); break;
    case 4: micro_kernel<4>(kc, a, lda, bp, c, ldc, nr, add); break;
    case 3: micro_kernel<3>(kc, a, lda, bp, c, ldc, nr, add); break;
    case 2: micro_kernel<2>(kc, a, lda, bp, c, ldc, nr, add); break;
    default: micro_kernel<1>(kc, a, lda, bp, c, ldc, nr, add); break;
  }
}

void gemm_avx2(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda,
               const float* b, std::size_t ldb, float* c, std::size_t ldc, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) {
      for (std::size_t i = 0; i < m; ++i) std::fill_n(c + i * ldc, n, 0.0f);
    }
    return;
  }
  thread_local std::vector<float> packed;
  for (std::size_t jc = 0; jc < n; jc += kNc) {
    const std::size_t nc = std::min(kNc, n - jc);
    const std::size_t panels = (nc + kNr - 1) / kNr;
    for (std::size_t pc = 0; pc < k; pc += kKc) {
      const std::size_t kc = std::min(kKc, k - pc);
      packed.resize(panels * kc * kNr);
      pack_b(kc, nc, b + pc * ldb + jc, ldb, packed.data());
      const bool add = accumulate || pc > 0;
      for (std::size_t ic = 0; ic < m; ic += kMr) {
        const std::size_t mr = std::min(kMr, m - ic);
        for (std::size_t jp = 0; jp < panels; ++jp) {
          const std::size_t nr = std::min(kNr, nc - jp * kNr);
          run_micro(mr, kc, a + ic * lda + pc, lda, packed.data() + jp * kc * kNr,
                    c + ic * ldc + jc + jp * kNr, ldc, nr, add);
        }
      }
    }
  }
}

OverlapCounts overlap_avx2(const std::uint8_t* a, const std::uint8_t* b, std::size_t n) {
  const __m256i zero = _mm256_setzero_si256();
  __m256i inter = _mm256_setzero_si256();
  __m256i uni = _mm256_setzero_si256();
  std::size_t i = 0;
  for (; i + 32 <= n; i += 32) {
    const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a + i));
    const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b + i));
    inter = _mm256_add_epi64(inter, _mm256_sad_epu8(_mm256_and_si256(va, vb), zero));
    uni = _mm256_add_epi64(uni, _mm256_sad_epu8(_mm256_or_si256(va, vb), zero));
  }
  alignas(32) std::uint64_t li[4];
  alignas(32) std::uint64_t lu[4];
  _mm256_store_si256(reinterpret_cast<__m256i*>(li), inter);
  _mm256_store_si256(reinterpret_cast<__m256i*>(lu), uni);
  OverlapCounts out{li[0] + li[1] + li[2] + li[3], lu[0] + lu[1] + lu[2] + lu[3]};
  for (; i < n; ++i) {
    out.intersection += static_cast<std::uint64_t>(a[i] & b[i]);
    out.union_ += static_cast<std::uint64_t>(a[i] | b[i]);
  }
  return out;
}

void axpy_avx2(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void moments_avx2(const float* x, std::size_t n, double* sum, double* sum_sq) {
  __m256d s = _mm256_setzero_pd();
  __m256d s2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    s = _mm256_add_pd(s, v);
    s2 = _mm256_fmadd_pd(v, v, s2);
  }
  alignas(32) double ls[4];
  alignas(32) double ls2[4];
  _mm256_store_pd(ls, s);
  _mm256_store_pd(ls2, s2);
  double total = (ls[0] + ls[1]) + (ls[2] + ls[3]);
  double total2 = (ls2[0] + ls2[1]) + (ls2[2] + ls2[3]);
  for (; i < n; ++i) {
    const double v = x[i];
    total += v;
    total2 += v * v;
  }
  *sum = total;
  *sum_sq = total2;
}

}  // namespace

const KernelTable* avx2_table_unchecked() {
  static const KernelTable table{"avx2", gemm_avx2, overlap_avx2, axpy_avx2, moments_avx2};
  return &table;
}

}  // namespace mmms::simd

#else

namespace mmms::simd {
const KernelTable* avx2_table_unchecked() { return nullptr; }
}  // namespace mmms::simd

#endif
