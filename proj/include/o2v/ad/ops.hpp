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

#include <span>
#include <utility>
#include <vector>

#include "o2v/ad/tape.hpp"

namespace o2v::ad {

// Elementwise. Operands must have equal size.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var neg(Var a);

Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var square(Var a);

Var sum(Var a);
Var dot(Var a, Var b);
// sum_i c_i * x_i for equally-sized x_i.
Var lincomb(std::span<const std::pair<double, Var>> terms);
Var lincomb(std::initializer_list<std::pair<double, Var>> terms);

// a: m x k; b: k x n (rank 2) or k (rank 1, giving an m-vector).
Var matmul(Var a, Var b);
// Same-size reinterpretation.
Var reshape(Var a, std::vector<int> shape);
// Contiguous flat range [offset, offset + size(shape)).
Var slice(Var a, std::size_t offset, std::vector<int> shape);
// Flat concatenation into a rank-1 tensor.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Columns [c0, c1) of a rank-2 tensor.
Var columns(Var a, int c0, int c1);
// diag(d) * m for m: r x c, d: r.
Var scale_rows(Var m, Var d);
Var trace(Var m);

// x: C x H x W; w: O x C x k x k; b: O. Square kernels, symmetric padding.
Var conv2d(Var x, Var w, Var b, int stride, int pad);
// x: C x H x W; w: C x O x k x k; b: O. Output (H-1)*stride - 2*pad + k.
Var conv_transpose2d(Var x, Var w, Var b, int stride, int pad);

// sum x*log(sigmoid(l)) + (1-x)*log(1-sigmoid(l)), computed stably.
Var bernoulli_loglik_logits(const Tensor& x, Var logits);
// log N(x; mean, diag(exp(log_std))^2), summed over components.
Var normal_logpdf(Var x, Var mean, Var log_std);
Var std_normal_logpdf(Var x);
// KL[N(mq, exp(lq)^2) || N(mp, exp(lp)^2)], summed over components.
Var kl_normal(Var mq, Var lq, Var mp, Var lp);
// KL[N(mean, exp(log_std)^2) || N(0, 1)].
Var kl_std_normal(Var mean, Var log_std);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double c, Var a) { return scale(a, c); }
inline Var operator*(Var a, double c) { return scale(a, c); }
inline Var operator+(Var a, double c) { return add_scalar(a, c); }

// Geometry helpers shared with tests.
int conv_out_size(int in, int k, int stride, int pad);
int conv_transpose_out_size(int in, int k, int stride, int pad);

}  // namespace o2v::ad
