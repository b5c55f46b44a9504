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
#include <span>
#include <vector>

#include "o2v/ad/ops.hpp"

namespace o2v::model {

// Acceleration network f_W(s, v): input [s; v] (2a), two tanh hidden
// layers of width `hidden`, linear output (a).
//
// Flat weight layout: W1 [H x 2a], b1 [H], W2 [H x H], b2 [H], W3 [a x H], b3 [a].
struct FieldArchitecture {
  int latent_dim = 3;
  int hidden = 50;

  std::size_t weight_count() const;
  void validate() const;

  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const;
  std::size_t w2_offset() const;
  std::size_t b2_offset() const;
  std::size_t w3_offset() const;
  std::size_t b3_offset() const;
};

struct LatentState {
  std::vector<double> s;
  std::vector<double> v;
};

struct LatentTrajectory {
  std::vector<double> times;
  std::vector<LatentState> states;
  std::vector<std::vector<double>> accels;  // f_W(s_t, v_t)
  std::vector<double> log_q;
};

// --- Plain double route -------------------------------------------------

std::vector<double> eval_field(const FieldArchitecture& arch, std::span<const double> w,
                               const LatentState& state);

// Exact Tr(df/dv) from the chain rule through both tanh layers.
double trace_jacobian_v(const FieldArchitecture& arch, std::span<const double> w,
                        const LatentState& state);

// Classical RK4 on (s, v, log q) with ds/dt = v, dv/dt = f, dlogq/dt = -Tr(df/dv).
// Throws DivergenceError on a non-finite state.
LatentTrajectory integrate(const FieldArchitecture& arch, const LatentState& z0,
                           double log_q0, std::span<const double> w,
                           std::span<const double> frame_times, int steps_per_frame);

// --- Differentiable route ------------------------------------------------

// A weight sample split into layer tensors. Built once per trajectory.
struct FieldVars {
  int latent_dim = 0;
  int hidden = 0;
  ad::Var w1, b1, w2, b2, w3, b3;
  ad::Var w1v;  // columns of W1 that read v
};

FieldVars bind_field(const FieldArchitecture& arch, ad::Var w);

struct FieldEval {
  ad::Var accel;
  ad::Var trace;  // Tr(df/dv), scalar
};

ad::Var eval_field(const FieldVars& f, ad::Var s, ad::Var v);
FieldEval eval_field_and_trace(const FieldVars& f, ad::Var s, ad::Var v);

struct TrajectoryVars {
  std::vector<double> times;
  std::vector<ad::Var> s;
  std::vector<ad::Var> v;
  std::vector<ad::Var> log_q;
  std::vector<ad::Var> accel;  // filled when requested
};

TrajectoryVars integrate(const FieldVars& f, ad::Var s0, ad::Var v0, ad::Var log_q0,
                         std::span<const double> frame_times, int steps_per_frame,
                         bool record_accel = false);

// Frame times 0, 1, ..., n-1: latent time runs in frame units.
std::vector<double> frame_index_times(int n);

}  // namespace o2v::model
