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

#include "o2v/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "o2v/common.hpp"
#include "o2v/simd/kernels.hpp"

namespace o2v::ad {
namespace {

using simd::Trans;

void require_same_size(Var a, Var b, const char* op) {
  if (a.size() != b.size())
    throw DimensionError(std::string(op) + ": size mismatch " +
                         shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

void require_same_tape(Var a, Var b) {
  if (&a.tape() != &b.tape()) throw Error("operands live on different tapes");
}

// Elementwise unary op; `deriv(x, y)` gives dy/dx.
template <typename F, typename D>
Var unary(Var a, F f, D deriv) {
  const Tensor& av = a.value();
  Tensor out(av.shape);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = f(av.data[i]);
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(),
                       [ai, deriv](Tape& t, int self) {
                         const auto& x = t.value(ai).data;
                         const auto& y = t.value(self).data;
                         const auto& gy = t.grad(self);
                         auto& gx = t.grad(ai);
                         for (std::size_t i = 0; i < gy.size(); ++i)
                           gx[i] += gy[i] * deriv(x[i], y[i]);
                       });
}

double softplus(double l) { return std::max(l, 0.0) + std::log1p(std::exp(-std::abs(l))); }

double sigmoid_value(double l) {
  if (l >= 0) return 1.0 / (1.0 + std::exp(-l));
  const double e = std::exp(l);
  return e / (1.0 + e);
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2*pi)

// Patch extraction for a convolution reading a C x H x W image with output
// grid oh x ow. cols has shape (C*k*k) x (oh*ow).
void im2col(const double* x, int c, int h, int w, int k, int stride, int pad,
            int oh, int ow, double* cols) {
  const int npos = oh * ow;
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        double* row = cols + static_cast<std::ptrdiff_t>((ch * k + ki) * k + kj) * npos;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          double* r = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(r, r + ow, 0.0);
            continue;
          }
          const double* xr = x + (static_cast<std::ptrdiff_t>(ch) * h + iy) * w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            r[ox] = (ix >= 0 && ix < w) ? xr[ix] : 0.0;
          }
        }
      }
}

// Adjoint of im2col: scatters-adds patch columns back into the image.
void col2im(const double* cols, int c, int h, int w, int k, int stride, int pad,
            int oh, int ow, double* x) {
  const int npos = oh * ow;
  for (int ch = 0; ch < c; ++ch)
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const double* row =
            cols + static_cast<std::ptrdiff_t>((ch * k + ki) * k + kj) * npos;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= h) continue;
          double* xr = x + (static_cast<std::ptrdiff_t>(ch) * h + iy) * w;
          const double* r = row + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < w) xr[ix] += r[ox];
          }
        }
      }
}

}  // namespace

int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

int conv_transpose_out_size(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

Var add(Var a, Var b) {
  require_same_size(a, b, "add");
  require_same_tape(a, b);
  Tensor out = a.value();
  simd::kernels().axpy(1.0, b.value().data.data(), out.data.data(), out.size());
  const int ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ai, bi](Tape& t, int self) {
                         const auto& g = t.grad(self);
                         const auto& k = simd::kernels();
                         if (t.requires_grad(ai)) k.axpy(1.0, g.data(), t.grad(ai).data(), g.size());
                         if (t.requires_grad(bi)) k.axpy(1.0, g.data(), t.grad(bi).data(), g.size());
                       });
}

Var sub(Var a, Var b) {
  require_same_size(a, b, "sub");
  require_same_tape(a, b);
  Tensor out = a.value();
  simd::kernels().axpy(-1.0, b.value().data.data(), out.data.data(), out.size());
  const int ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ai, bi](Tape& t, int self) {
                         const auto& g = t.grad(self);
                         const auto& k = simd::kernels();
                         if (t.requires_grad(ai)) k.axpy(1.0, g.data(), t.grad(ai).data(), g.size());
                         if (t.requires_grad(bi)) k.axpy(-1.0, g.data(), t.grad(bi).data(), g.size());
                       });
}

Var mul(Var a, Var b) {
  require_same_size(a, b, "mul");
  require_same_tape(a, b);
  Tensor out(a.shape());
  simd::kernels().hadamard(a.value().data.data(), b.value().data.data(),
                           out.data.data(), out.size());
  const int ai = a.id(), bi = b.id();
  return a.tape().push(std::move(out), a.requires_grad() || b.requires_grad(),
                       [ai, bi](Tape& t, int self) {
                         const auto& g = t.grad(self);
                         const auto& av = t.value(ai).data;
                         const auto& bv = t.value(bi).data;
                         if (t.requires_grad(ai)) {
                           auto& ga = t.grad(ai);
                           for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                         }
                         if (t.requires_grad(bi)) {
                           auto& gb = t.grad(bi);
                           for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                         }
                       });
}

Var scale(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.data) v *= c;
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ai, c](Tape& t, int self) {
    const auto& g = t.grad(self);
    simd::kernels().axpy(c, g.data(), t.grad(ai).data(), g.size());
  });
}

Var add_scalar(Var a, double c) {
  Tensor out = a.value();
  for (double& v : out.data) v += c;
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ai](Tape& t, int self) {
    const auto& g = t.grad(self);
    simd::kernels().axpy(1.0, g.data(), t.grad(ai).data(), g.size());
  });
}

Var neg(Var a) { return scale(a, -1.0); }

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); },
               [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; },
               [](double x, double) { return 2.0 * x; });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data) s += v;
  const int ai = a.id();
  return a.tape().push(Tensor::scalar(s), a.requires_grad(), [ai](Tape& t, int self) {
    const double g = t.grad(self)[0];
    for (double& v : t.grad(ai)) v += g;
  });
}

Var dot(Var a, Var b) {
  require_same_size(a, b, "dot");
  const double s =
      simd::kernels().dot(a.value().data.data(), b.value().data.data(), a.size());
  const int ai = a.id(), bi = b.id();
  return a.tape().push(Tensor::scalar(s), a.requires_grad() || b.requires_grad(),
                       [ai, bi](Tape& t, int self) {
                         const double g = t.grad(self)[0];
                         const auto& k = simd::kernels();
                         const auto& av = t.value(ai).data;
                         const auto& bv = t.value(bi).data;
                         if (t.requires_grad(ai)) k.axpy(g, bv.data(), t.grad(ai).data(), bv.size());
                         if (t.requires_grad(bi)) k.axpy(g, av.data(), t.grad(bi).data(), av.size());
                       });
}

Var lincomb(std::span<const std::pair<double, Var>> terms) {
  if (terms.empty()) throw DimensionError("lincomb of no terms");
  Tape& tape = terms[0].second.tape();
  Tensor out(terms[0].second.shape());
  bool rg = false;
  const auto& k = simd::kernels();
  std::vector<std::pair<double, int>> ids;
  ids.reserve(terms.size());
  for (const auto& [c, v] : terms) {
    require_same_size(terms[0].second, v, "lincomb");
    k.axpy(c, v.value().data.data(), out.data.data(), out.size());
    rg = rg || v.requires_grad();
    ids.emplace_back(c, v.id());
  }
  return tape.push(std::move(out), rg, [ids = std::move(ids)](Tape& t, int self) {
    const auto& g = t.grad(self);
    const auto& k = simd::kernels();
    for (const auto& [c, id] : ids)
      if (t.requires_grad(id)) k.axpy(c, g.data(), t.grad(id).data(), g.size());
  });
}

Var lincomb(std::initializer_list<std::pair<double, Var>> terms) {
  return lincomb(std::span<const std::pair<double, Var>>(terms.begin(), terms.size()));
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || (bv.rank() != 1 && bv.rank() != 2))
    throw DimensionError("matmul: bad ranks " + shape_string(av.shape) + " * " +
                         shape_string(bv.shape));
  const int m = av.dim(0), k = av.dim(1);
  const int n = bv.rank() == 2 ? bv.dim(1) : 1;
  if (bv.dim(0) != k)
    throw DimensionError("matmul: inner dimension mismatch " + shape_string(av.shape) +
                         " * " + shape_string(bv.shape));
  Tensor out(bv.rank() == 2 ? std::vector<int>{m, n} : std::vector<int>{m});
  simd::gemm_ex(Trans::kNo, Trans::kNo, m, n, k, av.data.data(), bv.data.data(),
                out.data.data(), false);
  const int ai = a.id(), bi = b.id();
  return a.tape().push(
      std::move(out), a.requires_grad() || b.requires_grad(),
      [ai, bi, m, n, k](Tape& t, int self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(ai))  // dA += G * B^T
          simd::gemm_ex(Trans::kNo, Trans::kYes, m, k, n, g.data(),
                        t.value(bi).data.data(), t.grad(ai).data(), true);
        if (t.requires_grad(bi))  // dB += A^T * G
          simd::gemm_ex(Trans::kYes, Trans::kNo, k, n, m, t.value(ai).data.data(),
                        g.data(), t.grad(bi).data(), true);
      });
}

Var reshape(Var a, std::vector<int> shape) {
  if (shape_size(shape) != a.size())
    throw DimensionError("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  Tensor out(std::move(shape), a.value().data);
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ai](Tape& t, int self) {
    const auto& g = t.grad(self);
    simd::kernels().axpy(1.0, g.data(), t.grad(ai).data(), g.size());
  });
}

Var slice(Var a, std::size_t offset, std::vector<int> shape) {
  const std::size_t n = shape_size(shape);
  if (offset + n > a.size())
    throw DimensionError("slice out of range: offset " + std::to_string(offset) + " + " +
                         std::to_string(n) + " > " + std::to_string(a.size()));
  const auto& src = a.value().data;
  Tensor out(std::move(shape),
             std::vector<double>(src.begin() + static_cast<std::ptrdiff_t>(offset),
                                 src.begin() + static_cast<std::ptrdiff_t>(offset + n)));
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(), [ai, offset](Tape& t, int self) {
    const auto& g = t.grad(self);
    simd::kernels().axpy(1.0, g.data(), t.grad(ai).data() + offset, g.size());
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat of no parts");
  std::vector<double> data;
  std::vector<std::pair<int, std::size_t>> ids;
  bool rg = false;
  for (Var p : parts) {
    ids.emplace_back(p.id(), data.size());
    const auto& d = p.value().data;
    data.insert(data.end(), d.begin(), d.end());
    rg = rg || p.requires_grad();
  }
  return parts[0].tape().push(Tensor::vector(std::move(data)), rg,
                              [ids = std::move(ids)](Tape& t, int self) {
                                const auto& g = t.grad(self);
                                for (const auto& [id, off] : ids) {
                                  if (!t.requires_grad(id)) continue;
                                  auto& gp = t.grad(id);
                                  simd::kernels().axpy(1.0, g.data() + off, gp.data(), gp.size());
                                }
                              });
}

Var concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var columns(Var a, int c0, int c1) {
  const Tensor& av = a.value();
  if (av.rank() != 2 || c0 < 0 || c1 > av.dim(1) || c0 >= c1)
    throw DimensionError("columns: bad range for " + shape_string(av.shape));
  const int rows = av.dim(0), cols = av.dim(1), w = c1 - c0;
  Tensor out({rows, w});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < w; ++c) out.data[r * w + c] = av.data[r * cols + c0 + c];
  const int ai = a.id();
  return a.tape().push(std::move(out), a.requires_grad(),
                       [ai, rows, cols, c0, w](Tape& t, int self) {
                         const auto& g = t.grad(self);
                         auto& ga = t.grad(ai);
                         for (int r = 0; r < rows; ++r)
                           for (int c = 0; c < w; ++c) ga[r * cols + c0 + c] += g[r * w + c];
                       });
}

Var scale_rows(Var m, Var d) {
  const Tensor& mv = m.value();
  if (mv.rank() != 2 || d.size() != static_cast<std::size_t>(mv.dim(0)))
    throw DimensionError("scale_rows: " + shape_string(mv.shape) + " by " +
                         shape_string(d.shape()));
  const int rows = mv.dim(0), cols = mv.dim(1);
  Tensor out(mv.shape);
  const auto& dv = d.value().data;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.data[r * cols + c] = dv[r] * mv.data[r * cols + c];
  const int mi = m.id(), di = d.id();
  return m.tape().push(std::move(out), m.requires_grad() || d.requires_grad(),
                       [mi, di, rows, cols](Tape& t, int self) {
                         const auto& g = t.grad(self);
                         const auto& mv = t.value(mi).data;
                         const auto& dv = t.value(di).data;
                         if (t.requires_grad(mi)) {
                           auto& gm = t.grad(mi);
                           for (int r = 0; r < rows; ++r)
                             simd::kernels().axpy(dv[r], g.data() + r * cols,
                                                  gm.data() + r * cols, cols);
                         }
                         if (t.requires_grad(di)) {
                           auto& gd = t.grad(di);
                           for (int r = 0; r < rows; ++r)
                             gd[r] += simd::kernels().dot(g.data() + r * cols,
                                                          mv.data() + r * cols, cols);
                         }
                       });
}

Var trace(Var m) {
  const Tensor& mv = m.value();
  if (mv.rank() != 2 || mv.dim(0) != mv.dim(1))
    throw DimensionError("trace of non-square " + shape_string(mv.shape));
  const int n = mv.dim(0);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += mv.data[i * n + i];
  const int mi = m.id();
  return m.tape().push(Tensor::scalar(s), m.requires_grad(), [mi, n](Tape& t, int self) {
    const double g = t.grad(self)[0];
    auto& gm = t.grad(mi);
    for (int i = 0; i < n; ++i) gm[i * n + i] += g;
  });
}

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3) ||
      b.size() != static_cast<std::size_t>(wv.dim(0)))
    throw DimensionError("conv2d: input " + shape_string(xv.shape) + ", weight " +
                         shape_string(wv.shape) + ", bias " + shape_string(b.shape()));
  const int c = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int o = wv.dim(0), k = wv.dim(2);
  const int oh = conv_out_size(h, k, stride, pad), ow = conv_out_size(wd, k, stride, pad);
  const int ck = c * k * k, npos = oh * ow;
  auto cols = std::make_shared<std::vector<double>>(static_cast<std::size_t>(ck) * npos);
  im2col(xv.data.data(), c, h, wd, k, stride, pad, oh, ow, cols->data());
  Tensor out({o, oh, ow});
  simd::gemm_ex(Trans::kNo, Trans::kNo, o, npos, ck, wv.data.data(), cols->data(),
                out.data.data(), false);
  const auto& bv = b.value().data;
  for (int ch = 0; ch < o; ++ch)
    for (int p = 0; p < npos; ++p) out.data[ch * npos + p] += bv[ch];
  const int xi = x.id(), wi = w.id(), bi = b.id();
  return x.tape().push(
      std::move(out), x.requires_grad() || w.requires_grad() || b.requires_grad(),
      [=](Tape& t, int self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(wi))
          simd::gemm_ex(Trans::kNo, Trans::kYes, o, ck, npos, g.data(), cols->data(),
                        t.grad(wi).data(), true);
        if (t.requires_grad(bi)) {
          auto& gb = t.grad(bi);
          for (int ch = 0; ch < o; ++ch)
            for (int p = 0; p < npos; ++p) gb[ch] += g[ch * npos + p];
        }
        if (t.requires_grad(xi)) {
          std::vector<double> dcols(static_cast<std::size_t>(ck) * npos);
          simd::gemm_ex(Trans::kYes, Trans::kNo, ck, npos, o, t.value(wi).data.data(),
                        g.data(), dcols.data(), false);
          col2im(dcols.data(), c, h, wd, k, stride, pad, oh, ow, t.grad(xi).data());
        }
      });
}

Var conv_transpose2d(Var x, Var w, Var b, int stride, int pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(0) != xv.dim(0) || wv.dim(2) != wv.dim(3) ||
      b.size() != static_cast<std::size_t>(wv.dim(1)))
    throw DimensionError("conv_transpose2d: input " + shape_string(xv.shape) + ", weight " +
                         shape_string(wv.shape) + ", bias " + shape_string(b.shape()));
  const int c = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
  const int o = wv.dim(1), k = wv.dim(2);
  const int oh = conv_transpose_out_size(h, k, stride, pad);
  const int ow = conv_transpose_out_size(wd, k, stride, pad);
  const int okk = o * k * k, npos = h * wd;
  // cols = W^T x, then scatter into the output grid.
  std::vector<double> cols(static_cast<std::size_t>(okk) * npos);
  simd::gemm_ex(Trans::kYes, Trans::kNo, okk, npos, c, wv.data.data(), xv.data.data(),
                cols.data(), false);
  Tensor out({o, oh, ow});
  col2im(cols.data(), o, oh, ow, k, stride, pad, h, wd, out.data.data());
  const auto& bv = b.value().data;
  const int opos = oh * ow;
  for (int ch = 0; ch < o; ++ch)
    for (int p = 0; p < opos; ++p) out.data[ch * opos + p] += bv[ch];
  const int xi = x.id(), wi = w.id(), bi = b.id();
  return x.tape().push(
      std::move(out), x.requires_grad() || w.requires_grad() || b.requires_grad(),
      [=](Tape& t, int self) {
        const auto& g = t.grad(self);
        if (t.requires_grad(bi)) {
          auto& gb = t.grad(bi);
          for (int ch = 0; ch < o; ++ch)
            for (int p = 0; p < opos; ++p) gb[ch] += g[ch * opos + p];
        }
        if (!t.requires_grad(xi) && !t.requires_grad(wi)) return;
        std::vector<double> gcols(static_cast<std::size_t>(okk) * npos);
        im2col(g.data(), o, oh, ow, k, stride, pad, h, wd, gcols.data());
        if (t.requires_grad(xi))
          simd::gemm_ex(Trans::kNo, Trans::kNo, c, npos, okk, t.value(wi).data.data(),
                        gcols.data(), t.grad(xi).data(), true);
        if (t.requires_grad(wi))
          simd::gemm_ex(Trans::kNo, Trans::kYes, c, okk, npos, t.value(xi).data.data(),
                        gcols.data(), t.grad(wi).data(), true);
      });
}

Var bernoulli_loglik_logits(const Tensor& x, Var logits) {
  if (x.size() != logits.size())
    throw DimensionError("bernoulli: frame " + shape_string(x.shape) + " vs logits " +
                         shape_string(logits.shape()));
  const auto& l = logits.value().data;
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) s += x.data[i] * l[i] - softplus(l[i]);
  const int li = logits.id();
  return logits.tape().push(Tensor::scalar(s), logits.requires_grad(),
                            [li, x = x.data](Tape& t, int self) {
                              const double g = t.grad(self)[0];
                              const auto& l = t.value(li).data;
                              auto& gl = t.grad(li);
                              for (std::size_t i = 0; i < l.size(); ++i)
                                gl[i] += g * (x[i] - sigmoid_value(l[i]));
                            });
}

Var normal_logpdf(Var x, Var mean, Var log_std) {
  require_same_size(x, mean, "normal_logpdf");
  require_same_size(x, log_std, "normal_logpdf");
  const auto& xv = x.value().data;
  const auto& mv = mean.value().data;
  const auto& lv = log_std.value().data;
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double z = (xv[i] - mv[i]) * std::exp(-lv[i]);
    s += -0.5 * z * z - lv[i] - kHalfLog2Pi;
  }
  const int xi = x.id(), mi = mean.id(), li = log_std.id();
  return x.tape().push(
      Tensor::scalar(s), x.requires_grad() || mean.requires_grad() || log_std.requires_grad(),
      [xi, mi, li](Tape& t, int self) {
        const double g = t.grad(self)[0];
        const auto& xv = t.value(xi).data;
        const auto& mv = t.value(mi).data;
        const auto& lv = t.value(li).data;
        const bool gx = t.requires_grad(xi), gm = t.requires_grad(mi), gl = t.requires_grad(li);
        for (std::size_t i = 0; i < xv.size(); ++i) {
          const double inv = std::exp(-lv[i]);
          const double z = (xv[i] - mv[i]) * inv;
          if (gx) t.grad(xi)[i] -= g * z * inv;
          if (gm) t.grad(mi)[i] += g * z * inv;
          if (gl) t.grad(li)[i] += g * (z * z - 1.0);
        }
      });
}

Var std_normal_logpdf(Var x) {
  const auto& xv = x.value().data;
  double s = 0.0;
  for (double v : xv) s += -0.5 * v * v - kHalfLog2Pi;
  const int xi = x.id();
  return x.tape().push(Tensor::scalar(s), x.requires_grad(), [xi](Tape& t, int self) {
    const double g = t.grad(self)[0];
    const auto& xv = t.value(xi).data;
    auto& gx = t.grad(xi);
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] -= g * xv[i];
  });
}

Var kl_normal(Var mq, Var lq, Var mp, Var lp) {
  require_same_size(mq, lq, "kl_normal");
  require_same_size(mq, mp, "kl_normal");
  require_same_size(mq, lp, "kl_normal");
  const auto& a = mq.value().data;
  const auto& b = lq.value().data;
  const auto& c = mp.value().data;
  const auto& d = lp.value().data;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double vq = std::exp(2.0 * b[i]), vp = std::exp(2.0 * d[i]);
    const double dm = a[i] - c[i];
    s += d[i] - b[i] + (vq + dm * dm) / (2.0 * vp) - 0.5;
  }
  const int ia = mq.id(), ib = lq.id(), ic = mp.id(), id = lp.id();
  const bool rg = mq.requires_grad() || lq.requires_grad() || mp.requires_grad() ||
                  lp.requires_grad();
  return mq.tape().push(Tensor::scalar(s), rg, [ia, ib, ic, id](Tape& t, int self) {
    const double g = t.grad(self)[0];
    const auto& a = t.value(ia).data;
    const auto& b = t.value(ib).data;
    const auto& c = t.value(ic).data;
    const auto& d = t.value(id).data;
    const bool ga = t.requires_grad(ia), gb = t.requires_grad(ib), gc = t.requires_grad(ic),
               gd = t.requires_grad(id);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double vq = std::exp(2.0 * b[i]), vp = std::exp(2.0 * d[i]);
      const double dm = a[i] - c[i];
      if (ga) t.grad(ia)[i] += g * dm / vp;
      if (gc) t.grad(ic)[i] -= g * dm / vp;
      if (gb) t.grad(ib)[i] += g * (vq / vp - 1.0);
      if (gd) t.grad(id)[i] += g * (1.0 - (vq + dm * dm) / vp);
    }
  });
}

Var kl_std_normal(Var mean, Var log_std) {
  require_same_size(mean, log_std, "kl_std_normal");
  const auto& m = mean.value().data;
  const auto& l = log_std.value().data;
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    s += -l[i] + 0.5 * (std::exp(2.0 * l[i]) + m[i] * m[i]) - 0.5;
  const int mi = mean.id(), li = log_std.id();
  return mean.tape().push(Tensor::scalar(s), mean.requires_grad() || log_std.requires_grad(),
                          [mi, li](Tape& t, int self) {
                            const double g = t.grad(self)[0];
                            const auto& m = t.value(mi).data;
                            const auto& l = t.value(li).data;
                            if (t.requires_grad(mi)) {
                              auto& gm = t.grad(mi);
                              for (std::size_t i = 0; i < m.size(); ++i) gm[i] += g * m[i];
                            }
                            if (t.requires_grad(li)) {
                              auto& gl = t.grad(li);
                              for (std::size_t i = 0; i < l.size(); ++i)
                                gl[i] += g * (std::exp(2.0 * l[i]) - 1.0);
                            }
                          });
}

}  // namespace o2v::ad
