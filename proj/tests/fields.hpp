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

#include <vector>

#include "o2v/model/latent_ode.hpp"

namespace o2v::testing {

// Small-signal construction: W1 = eps * I (H = 2a), W2 = I, W3 = [A B] / eps.
// Then f(s, v) = A s + B v up to O(eps^2) relative error.
inline std::vector<double> linear_field(const model::FieldArchitecture& arch,
                                        const std::vector<std::vector<double>>& a_mat,
                                        const std::vector<std::vector<double>>& b_mat,
                                        double eps = 1e-4) {
  const int a = arch.latent_dim, h = arch.hidden;
  std::vector<double> w(arch.weight_count(), 0.0);
  for (int i = 0; i < 2 * a; ++i) w[arch.w1_offset() + i * 2 * a + i] = eps;
  for (int i = 0; i < h; ++i) w[arch.w2_offset() + i * h + i] = 1.0;
  for (int r = 0; r < a; ++r)
    for (int c = 0; c < a; ++c) {
      w[arch.w3_offset() + r * h + c] = a_mat[r][c] / eps;
      w[arch.w3_offset() + r * h + a + c] = b_mat[r][c] / eps;
    }
  return w;
}

// f = -s in one dimension.
inline std::vector<double> harmonic_field(const model::FieldArchitecture& arch) {
  return linear_field(arch, {{-1.0}}, {{0.0}});
}

}  // namespace o2v::testing
