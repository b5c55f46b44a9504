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

#include <cstdlib>
#include <cstring>
#include <string_view>
#include <vector>

#include "o2v/simd/kernels.hpp"

namespace o2v::simd {
namespace {

void gemm_scalar(int m, int n, int k, const double* a, int lda, const double* b,
                 int ldb, double* c, int ldc, bool accumulate) {
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<std::ptrdiff_t>(i) * ldc;
    if (!accumulate) std::memset(crow, 0, sizeof(double) * n);
    const double* arow = a + static_cast<std::ptrdiff_t>(i) * lda;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = b + static_cast<std::ptrdiff_t>(p) * ldb;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void hadamard_scalar(const double* x, const double* y, double* z,
                     std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = x[i] * y[i];
}

const KernelTable kScalar{"scalar", gemm_scalar, dot_scalar, axpy_scalar,
                          hadamard_scalar};

const KernelTable* select_default() {
  if (const char* env = std::getenv("O2V_SIMD");
      env != nullptr && std::string_view(env) == "scalar") {
    return &kScalar;
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &kScalar;
}

const KernelTable*& active_slot() {
  static const KernelTable* active = select_default();
  return active;
}

void transpose(const double* src, int rows, int cols, double* dst) {
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      dst[static_cast<std::ptrdiff_t>(j) * rows + i] =
          src[static_cast<std::ptrdiff_t>(i) * cols + j];
}

}  // namespace

const KernelTable& scalar_kernels() { return kScalar; }

const KernelTable& kernels() { return *active_slot(); }

void set_active(const KernelTable& table) { active_slot() = &table; }

void gemm_ex(Trans ta, Trans tb, int m, int n, int k, const double* a,
             const double* b, double* c, bool accumulate) {
  if (m == 0 || n == 0) return;
  if (k == 0) {
    if (!accumulate) std::memset(c, 0, sizeof(double) * m * n);
    return;
  }
  const KernelTable& kt = kernels();
  thread_local std::vector<double> pack_a;
  thread_local std::vector<double> pack_b;
  if (ta == Trans::kYes) {
    pack_a.resize(static_cast<std::size_t>(m) * k);
    transpose(a, k, m, pack_a.data());
    a = pack_a.data();
  }
  if (tb == Trans::kYes) {
    pack_b.resize(static_cast<std::size_t>(k) * n);
    transpose(b, n, k, pack_b.data());
    b = pack_b.data();
  }
  if (n == 1) {
    // Matrix-vector product; b is a contiguous k-vector.
    for (int i = 0; i < m; ++i) {
      const double v = kt.dot(a + static_cast<std::ptrdiff_t>(i) * k, b, k);
      c[i] = accumulate ? c[i] + v : v;
    }
    return;
  }
  kt.gemm(m, n, k, a, k, b, n, c, n, accumulate);
}

}  // namespace o2v::simd
