// Copyright 2026 The ode2vae-cpp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Compiled with -mavx2 -mfma. Nothing here may run before avx2_kernels()
// has confirmed CPU support.

#include <cstddef>
#include <cstring>

#include "o2v/simd/kernels.hpp"

#if defined(__x86_64__) && defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define O2V_HAVE_AVX2 1
#else
#define O2V_HAVE_AVX2 0
#endif

namespace o2v::simd {

#if O2V_HAVE_AVX2
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// 4 rows x 8 columns register block.
inline void block_4x8(int k, const double* a, int lda, const double* b,
                      int ldb, double* c, int ldc, bool accumulate) {
  __m256d c00, c01, c10, c11, c20, c21, c30, c31;
  if (accumulate) {
    c00 = _mm256_loadu_pd(c);
    c01 = _mm256_loadu_pd(c + 4);
    c10 = _mm256_loadu_pd(c + ldc);
    c11 = _mm256_loadu_pd(c + ldc + 4);
    c20 = _mm256_loadu_pd(c + 2 * ldc);
    c21 = _mm256_loadu_pd(c + 2 * ldc + 4);
    c30 = _mm256_loadu_pd(c + 3 * ldc);
    c31 = _mm256_loadu_pd(c + 3 * ldc + 4);
  } else {
    c00 = c01 = c10 = c11 = c20 = c21 = c30 = c31 = _mm256_setzero_pd();
  }
  for (int p = 0; p < k; ++p) {
    const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256d b0 = _mm256_loadu_pd(bp);
    const __m256d b1 = _mm256_loadu_pd(bp + 4);
    __m256d av = _mm256_broadcast_sd(a + p);
    c00 = _mm256_fmadd_pd(av, b0, c00);
    c01 = _mm256_fmadd_pd(av, b1, c01);
    av = _mm256_broadcast_sd(a + lda + p);
    c10 = _mm256_fmadd_pd(av, b0, c10);
    c11 = _mm256_fmadd_pd(av, b1, c11);
    av = _mm256_broadcast_sd(a + 2 * lda + p);
    c20 = _mm256_fmadd_pd(av, b0, c20);
    c21 = _mm256_fmadd_pd(av, b1, c21);
    av = _mm256_broadcast_sd(a + 3 * lda + p);
    c30 = _mm256_fmadd_pd(av, b0, c30);
    c31 = _mm256_fmadd_pd(av, b1, c31);
  }
  _mm256_storeu_pd(c, c00);
  _mm256_storeu_pd(c + 4, c01);
  _mm256_storeu_pd(c + ldc, c10);
  _mm256_storeu_pd(c + ldc + 4, c11);
  _mm256_storeu_pd(c + 2 * ldc, c20);
  _mm256_storeu_pd(c + 2 * ldc + 4, c21);
  _mm256_storeu_pd(c + 3 * ldc, c30);
  _mm256_storeu_pd(c + 3 * ldc + 4, c31);
}

// 1 row x 8 columns.
inline void block_1x8(int k, const double* a, const double* b, int ldb,
                      double* c, bool accumulate) {
  __m256d c0 = accumulate ? _mm256_loadu_pd(c) : _mm256_setzero_pd();
  __m256d c1 = accumulate ? _mm256_loadu_pd(c + 4) : _mm256_setzero_pd();
  for (int p = 0; p < k; ++p) {
    const double* bp = b + static_cast<std::ptrdiff_t>(p) * ldb;
    const __m256d av = _mm256_broadcast_sd(a + p);
    c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), c0);
    c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), c1);
  }
  _mm256_storeu_pd(c, c0);
  _mm256_storeu_pd(c + 4, c1);
}

void gemm_avx2(int m, int n, int k, const double* a, int lda, const double* b,
               int ldb, double* c, int ldc, bool accumulate) {
  const int n8 = n - n % 8;
  int i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    double* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
    for (int j = 0; j < n8; j += 8)
      block_4x8(k, ai, lda, b + j, ldb, ci + j, ldc, accumulate);
  }
  for (; i < m; ++i) {
    const double* ai = a + static_cast<std::ptrdiff_t>(i) * lda;
    double* ci = c + static_cast<std::ptrdiff_t>(i) * ldc;
    for (int j = 0; j < n8; j += 8)
      block_1x8(k, ai, b + j, ldb, ci + j, accumulate);
  }
  if (n8 == n) return;
  // Column tail.
  for (int r = 0; r < m; ++r) {
    const double* ar = a + static_cast<std::ptrdiff_t>(r) * lda;
    double* cr = c + static_cast<std::ptrdiff_t>(r) * ldc;
    for (int j = n8; j < n; ++j) {
      double s = accumulate ? cr[j] : 0.0;
      for (int p = 0; p < k; ++p)
        s = __builtin_fma(ar[p], b[static_cast<std::ptrdiff_t>(p) * ldb + j],
                          s);
      cr[j] = s;
    }
  }
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d s0 = _mm256_setzero_pd();
  __m256d s1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
    s1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4),
                         _mm256_loadu_pd(y + i + 4), s1);
  }
  for (; i + 4 <= n; i += 4)
    s0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s0);
  double s = hsum(_mm256_add_pd(s0, s1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_avx2(const double* x, const double* y, double* z,
                   std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(z + i,
                     _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) z[i] = x[i] * y[i];
}

const KernelTable kAvx2{"avx2", gemm_avx2, dot_avx2, axpy_avx2, hadamard_avx2};

}  // namespace

const KernelTable* avx2_kernels() {
  static const bool supported =
      __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &kAvx2 : nullptr;
}

#else

const KernelTable* avx2_kernels() { return nullptr; }

#endif

}  // namespace o2v::simd
