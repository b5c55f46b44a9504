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

#pragma once

#include <cstddef>
#include <string_view>

namespace o2v::simd {

// Dense double-precision kernels used by the autodiff tape. Every matrix is
// row-major with an explicit leading dimension.
//
// gemm computes C = A * B (or C += A * B when accumulate is set) with
// A: m x k, B: k x n, C: m x n. Transposed operands are packed by the caller
// (see gemm_ex).
struct KernelTable {
  std::string_view name;
  void (*gemm)(int m, int n, int k, const double* a, int lda, const double* b,
               int ldb, double* c, int ldc, bool accumulate);
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // z = x * y (elementwise)
  void (*hadamard)(const double* x, const double* y, double* z, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the build has no AVX2 path or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

// The table selected at first use: AVX2 when available, scalar otherwise.
// Setting O2V_SIMD=scalar in the environment forces the reference path.
const KernelTable& kernels();

// Overrides the active table (tests and benchmarks). Not thread-safe with
// concurrent kernel use.
void set_active(const KernelTable& table);

enum class Trans { kNo, kYes };

// C (+)= op(A) * op(B), where op(A) is m x k and op(B) is k x n. A is stored
// as m x k (kNo) or k x m (kYes); likewise for B.
void gemm_ex(Trans ta, Trans tb, int m, int n, int k, const double* a,
             const double* b, double* c, bool accumulate);

}  // namespace o2v::simd
