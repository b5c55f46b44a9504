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

#include "o2v/model/latent_ode.hpp"

#include <cmath>
#include <string>

#include "o2v/common.hpp"

namespace o2v::model {
namespace {

using ad::Var;

struct Hidden {
  std::vector<double> h1, h2;
};

void check_state(const FieldArchitecture& arch, std::span<const double> w,
                 const LatentState& z) {
  if (w.size() != arch.weight_count())
    throw DimensionError("field weights: got " + std::to_string(w.size()) + ", expected " +
                         std::to_string(arch.weight_count()));
  const auto a = static_cast<std::size_t>(arch.latent_dim);
  if (z.s.size() != a || z.v.size() != a)
    throw DimensionError("latent state dimension does not match latent_dim " +
                         std::to_string(a));
}

// Forward pass returning the output and hidden activations.
std::vector<double> forward(const FieldArchitecture& arch, std::span<const double> w,
                            const LatentState& z, Hidden* hidden) {
  const int a = arch.latent_dim, h = arch.hidden, in = 2 * a;
  const double* w1 = w.data() + arch.w1_offset();
  const double* b1 = w.data() + arch.b1_offset();
  const double* w2 = w.data() + arch.w2_offset();
  const double* b2 = w.data() + arch.b2_offset();
  const double* w3 = w.data() + arch.w3_offset();
  const double* b3 = w.data() + arch.b3_offset();
  std::vector<double> x(z.s);
  x.insert(x.end(), z.v.begin(), z.v.end());
  std::vector<double> h1(h), h2(h), out(a);
  for (int i = 0; i < h; ++i) {
    double acc = b1[i];
    for (int j = 0; j < in; ++j) acc += w1[i * in + j] * x[j];
    h1[i] = std::tanh(acc);
  }
  for (int i = 0; i < h; ++i) {
    double acc = b2[i];
    for (int j = 0; j < h; ++j) acc += w2[i * h + j] * h1[j];
    h2[i] = std::tanh(acc);
  }
  for (int i = 0; i < a; ++i) {
    double acc = b3[i];
    for (int j = 0; j < h; ++j) acc += w3[i * h + j] * h2[j];
    out[i] = acc;
  }
  if (hidden) *hidden = {std::move(h1), std::move(h2)};
  return out;
}

bool finite(const LatentState& z, double lq) {
  for (double x : z.s)
    if (!std::isfinite(x)) return false;
  for (double x : z.v)
    if (!std::isfinite(x)) return false;
  return std::isfinite(lq);
}

void check_times(std::span<const double> times, int steps) {
  if (times.empty()) throw DimensionError("integrate: no frame times");
  if (steps < 1) throw ConfigError("steps_per_frame must be >= 1");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw ConfigError("frame times must be strictly increasing");
}

[[noreturn]] void diverged(double t) {
  throw DivergenceError("dynamics diverged at t=" + std::to_string(t), t);
}

}  // namespace

std::size_t FieldArchitecture::weight_count() const {
  const std::size_t a = latent_dim, h = hidden;
  return (2 * a * h + h) + (h * h + h) + (h * a + a);
}

void FieldArchitecture::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (hidden < 1) throw ConfigError("field hidden width must be >= 1");
}

std::size_t FieldArchitecture::b1_offset() const {
  return static_cast<std::size_t>(2 * latent_dim) * hidden;
}
std::size_t FieldArchitecture::w2_offset() const { return b1_offset() + hidden; }
std::size_t FieldArchitecture::b2_offset() const {
  return w2_offset() + static_cast<std::size_t>(hidden) * hidden;
}
std::size_t FieldArchitecture::w3_offset() const { return b2_offset() + hidden; }
std::size_t FieldArchitecture::b3_offset() const {
  return w3_offset() + static_cast<std::size_t>(latent_dim) * hidden;
}

std::vector<double> eval_field(const FieldArchitecture& arch, std::span<const double> w,
                               const LatentState& state) {
  check_state(arch, w, state);
  return forward(arch, w, state, nullptr);
}

double trace_jacobian_v(const FieldArchitecture& arch, std::span<const double> w,
                        const LatentState& state) {
  check_state(arch, w, state);
  Hidden hid;
  forward(arch, w, state, &hid);
  const int a = arch.latent_dim, h = arch.hidden, in = 2 * a;
  const double* w1 = w.data() + arch.w1_offset();
  const double* w2 = w.data() + arch.w2_offset();
  const double* w3 = w.data() + arch.w3_offset();
  std::vector<double> u1(h), u2(h);
  double tr = 0.0;
  for (int c = 0; c < a; ++c) {
    // Directional derivative along v_c.
    for (int i = 0; i < h; ++i)
      u1[i] = (1.0 - hid.h1[i] * hid.h1[i]) * w1[i * in + a + c];
    for (int i = 0; i < h; ++i) {
      double acc = 0.0;
      for (int j = 0; j < h; ++j) acc += w2[i * h + j] * u1[j];
      u2[i] = (1.0 - hid.h2[i] * hid.h2[i]) * acc;
    }
    double d = 0.0;
    for (int j = 0; j < h; ++j) d += w3[c * h + j] * u2[j];
    tr += d;
  }
  return tr;
}

LatentTrajectory integrate(const FieldArchitecture& arch, const LatentState& z0,
                           double log_q0, std::span<const double> w,
                           std::span<const double> frame_times, int steps_per_frame) {
  check_state(arch, w, z0);
  check_times(frame_times, steps_per_frame);
  const std::size_t a = static_cast<std::size_t>(arch.latent_dim);

  struct Deriv {
    std::vector<double> ds, dv;
    double dl;
  };
  auto deriv = [&](const LatentState& z) {
    return Deriv{z.v, eval_field(arch, w, z), -trace_jacobian_v(arch, w, z)};
  };
  auto shifted = [&](const LatentState& z, const Deriv& k, double h) {
    LatentState out = z;
    for (std::size_t i = 0; i < a; ++i) {
      out.s[i] += h * k.ds[i];
      out.v[i] += h * k.dv[i];
    }
    return out;
  };

  LatentTrajectory traj;
  LatentState z = z0;
  double lq = log_q0;
  auto record = [&](double t) {
    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.accels.push_back(eval_field(arch, w, z));
    traj.log_q.push_back(lq);
  };
  record(frame_times[0]);
  for (std::size_t f = 1; f < frame_times.size(); ++f) {
    const double h = (frame_times[f] - frame_times[f - 1]) / steps_per_frame;
    for (int step = 0; step < steps_per_frame; ++step) {
      const Deriv k1 = deriv(z);
      const Deriv k2 = deriv(shifted(z, k1, 0.5 * h));
      const Deriv k3 = deriv(shifted(z, k2, 0.5 * h));
      const Deriv k4 = deriv(shifted(z, k3, h));
      for (std::size_t i = 0; i < a; ++i) {
        z.s[i] += h / 6.0 * (k1.ds[i] + 2.0 * k2.ds[i] + 2.0 * k3.ds[i] + k4.ds[i]);
        z.v[i] += h / 6.0 * (k1.dv[i] + 2.0 * k2.dv[i] + 2.0 * k3.dv[i] + k4.dv[i]);
      }
      lq += h / 6.0 * (k1.dl + 2.0 * k2.dl + 2.0 * k3.dl + k4.dl);
      if (!finite(z, lq)) diverged(frame_times[f - 1] + (step + 1) * h);
    }
    record(frame_times[f]);
  }
  return traj;
}

FieldVars bind_field(const FieldArchitecture& arch, Var w) {
  arch.validate();
  if (w.size() != arch.weight_count())
    throw DimensionError("field weights: got " + std::to_string(w.size()) + ", expected " +
                         std::to_string(arch.weight_count()));
  const int a = arch.latent_dim, h = arch.hidden;
  FieldVars f;
  f.latent_dim = a;
  f.hidden = h;
  f.w1 = ad::slice(w, arch.w1_offset(), {h, 2 * a});
  f.b1 = ad::slice(w, arch.b1_offset(), {h});
  f.w2 = ad::slice(w, arch.w2_offset(), {h, h});
  f.b2 = ad::slice(w, arch.b2_offset(), {h});
  f.w3 = ad::slice(w, arch.w3_offset(), {a, h});
  f.b3 = ad::slice(w, arch.b3_offset(), {a});
  f.w1v = ad::columns(f.w1, a, 2 * a);
  return f;
}

namespace {

struct HiddenVars {
  Var h1, h2, out;
};

HiddenVars forward_vars(const FieldVars& f, Var s, Var v) {
  if (s.size() != static_cast<std::size_t>(f.latent_dim) || v.size() != s.size())
    throw DimensionError("latent state dimension does not match latent_dim " +
                         std::to_string(f.latent_dim));
  const Var x = ad::concat({s, v});
  const Var h1 = ad::tanh(ad::matmul(f.w1, x) + f.b1);
  const Var h2 = ad::tanh(ad::matmul(f.w2, h1) + f.b2);
  return {h1, h2, ad::matmul(f.w3, h2) + f.b3};
}

}  // namespace

Var eval_field(const FieldVars& f, Var s, Var v) { return forward_vars(f, s, v).out; }

FieldEval eval_field_and_trace(const FieldVars& f, Var s, Var v) {
  const HiddenVars hv = forward_vars(f, s, v);
  const Var d1 = ad::add_scalar(ad::neg(ad::square(hv.h1)), 1.0);
  const Var d2 = ad::add_scalar(ad::neg(ad::square(hv.h2)), 1.0);
  // J_v = W3 diag(d2) W2 diag(d1) W1v, built as a product of small matrices.
  const Var u1 = ad::scale_rows(f.w1v, d1);
  const Var u2 = ad::scale_rows(ad::matmul(f.w2, u1), d2);
  const Var jv = ad::matmul(f.w3, u2);
  return {hv.out, ad::trace(jv)};
}

TrajectoryVars integrate(const FieldVars& f, Var s0, Var v0, Var log_q0,
                         std::span<const double> frame_times, int steps_per_frame,
                         bool record_accel) {
  check_times(frame_times, steps_per_frame);
  TrajectoryVars out;
  Var s = s0, v = v0, lq = log_q0;
  auto record = [&](double t) {
    out.times.push_back(t);
    out.s.push_back(s);
    out.v.push_back(v);
    out.log_q.push_back(lq);
    if (record_accel) out.accel.push_back(eval_field(f, s, v));
  };
  auto check_finite = [](Var x) {
    for (double e : x.value().data)
      if (!std::isfinite(e)) return false;
    return true;
  };
  record(frame_times[0]);
  for (std::size_t fr = 1; fr < frame_times.size(); ++fr) {
    const double h = (frame_times[fr] - frame_times[fr - 1]) / steps_per_frame;
    for (int step = 0; step < steps_per_frame; ++step) {
      const FieldEval k1 = eval_field_and_trace(f, s, v);
      const Var s2 = ad::lincomb({{1.0, s}, {0.5 * h, v}});
      const Var v2 = ad::lincomb({{1.0, v}, {0.5 * h, k1.accel}});
      const FieldEval k2 = eval_field_and_trace(f, s2, v2);
      const Var s3 = ad::lincomb({{1.0, s}, {0.5 * h, v2}});
      const Var v3 = ad::lincomb({{1.0, v}, {0.5 * h, k2.accel}});
      const FieldEval k3 = eval_field_and_trace(f, s3, v3);
      const Var s4 = ad::lincomb({{1.0, s}, {h, v3}});
      const Var v4 = ad::lincomb({{1.0, v}, {h, k3.accel}});
      const FieldEval k4 = eval_field_and_trace(f, s4, v4);
      const double c = h / 6.0;
      s = ad::lincomb({{1.0, s}, {c, v}, {2.0 * c, v2}, {2.0 * c, v3}, {c, v4}});
      v = ad::lincomb(
          {{1.0, v}, {c, k1.accel}, {2.0 * c, k2.accel}, {2.0 * c, k3.accel}, {c, k4.accel}});
      lq = ad::lincomb({{1.0, lq},
                        {-c, k1.trace},
                        {-2.0 * c, k2.trace},
                        {-2.0 * c, k3.trace},
                        {-c, k4.trace}});
      if (!check_finite(s) || !check_finite(v) || !check_finite(lq))
        diverged(frame_times[fr - 1] + (step + 1) * h);
    }
    record(frame_times[fr]);
  }
  return out;
}

std::vector<double> frame_index_times(int n) {
  std::vector<double> t(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) t[i] = i;
  return t;
}

}  // namespace o2v::model
