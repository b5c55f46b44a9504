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


#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fields.hpp"
#include "grad_check.hpp"
#include "o2v/common.hpp"
#include "o2v/model/latent_ode.hpp"

using namespace o2v;
using namespace o2v::model;

namespace {

std::vector<double> random_weights(const FieldArchitecture& arch, std::mt19937_64& rng,
                                   double scale = 0.5) {
  std::normal_distribution<double> n(0.0, scale);
  std::vector<double> w(arch.weight_count());
  for (double& x : w) x = n(rng);
  return w;
}

double harmonic_error(int steps) {
  const FieldArchitecture arch{1, 2};
  const auto w = testing::harmonic_field(arch);
  const std::vector<double> times{0.0, std::numbers::pi};
  const auto traj = integrate(arch, {{1.0}, {0.0}}, 0.0, w, times, steps);
  const auto& z = traj.states.back();
  return std::hypot(z.s[0] + 1.0, z.v[0]);
}

}  // namespace

TEST_CASE("weight count formula") {
  const FieldArchitecture arch{3, 50};
  CHECK(arch.weight_count() == 3053);
  const FieldArchitecture small{2, 4};
  CHECK(small.weight_count() == (16 + 4) + (16 + 4) + (8 + 2));
  CHECK(small.b3_offset() + 2 == small.weight_count());
}

TEST_CASE("zero weights give a zero field") {
  const FieldArchitecture arch{3, 8};
  const std::vector<double> w(arch.weight_count(), 0.0);
  const auto f = eval_field(arch, w, {{1, -2, 3}, {0.5, 0.1, -4}});
  for (double x : f) CHECK(x == 0.0);
  CHECK(trace_jacobian_v(arch, w, {{1, -2, 3}, {0.5, 0.1, -4}}) == 0.0);
}

TEST_CASE("linear read-out matches the hand matrix product") {
  const FieldArchitecture arch{2, 4};
  const std::vector<std::vector<double>> A{{0.3, -1.0}, {2.0, 0.5}}, B{{-0.2, 0.1}, {0.4, 0.7}};
  const auto w = testing::linear_field(arch, A, B);
  const LatentState z{{0.3, -0.8}, {1.1, 0.25}};
  const auto f = eval_field(arch, w, z);
  for (int r = 0; r < 2; ++r) {
    const double ref = A[r][0] * z.s[0] + A[r][1] * z.s[1] + B[r][0] * z.v[0] + B[r][1] * z.v[1];
    CHECK(f[r] == doctest::Approx(ref).epsilon(1e-6));
  }
  CHECK(trace_jacobian_v(arch, w, z) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("field weight derivatives match finite differences") {
  std::mt19937_64 rng(1);
  const FieldArchitecture arch{2, 5};
  auto w = random_weights(arch, rng);
  const LatentState z{{0.4, -0.3}, {0.2, 0.9}};
  ad::Tape tape;
  const ad::Var wv = tape.leaf(ad::Tensor::vector(w));
  const auto fv = bind_field(arch, wv);
  const ad::Var out = ad::sum(eval_field(fv, tape.constant(ad::Tensor::vector(z.s)),
                                         tape.constant(ad::Tensor::vector(z.v))));
  tape.backward(out);
  const auto g = tape.grad(wv.id());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double h = 1e-6, w0 = w[i];
    w[i] = w0 + h;
    auto fp = eval_field(arch, w, z);
    w[i] = w0 - h;
    auto fm = eval_field(arch, w, z);
    w[i] = w0;
    const double fd = ((fp[0] + fp[1]) - (fm[0] + fm[1])) / (2 * h);
    CHECK(std::abs(g[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("exact trace matches the finite-difference trace") {
  std::mt19937_64 rng(2);
  for (int a : {1, 2, 3, 5}) {
    const FieldArchitecture arch{a, 7};
    const auto w = random_weights(arch, rng);
    LatentState z{std::vector<double>(a), std::vector<double>(a)};
    std::normal_distribution<double> n;
    for (int i = 0; i < a; ++i) {
      z.s[i] = n(rng);
      z.v[i] = n(rng);
    }
    double fd = 0.0;
    const double h = 1e-6;
    for (int i = 0; i < a; ++i) {
      LatentState p = z, m = z;
      p.v[i] += h;
      m.v[i] -= h;
      fd += (eval_field(arch, w, p)[i] - eval_field(arch, w, m)[i]) / (2 * h);
    }
    CHECK(std::abs(trace_jacobian_v(arch, w, z) - fd) <= 1e-5);

    ad::Tape tape;
    const auto fv = bind_field(arch, tape.constant(ad::Tensor::vector(w)));
    const auto ev = eval_field_and_trace(fv, tape.constant(ad::Tensor::vector(z.s)),
                                         tape.constant(ad::Tensor::vector(z.v)));
    CHECK(ev.trace.item() == doctest::Approx(trace_jacobian_v(arch, w, z)).epsilon(1e-12));
  }
}

TEST_CASE("v-independent field has zero trace") {
  std::mt19937_64 rng(3);
  const FieldArchitecture arch{3, 6};
  auto w = random_weights(arch, rng);
  for (int r = 0; r < 6; ++r)
    for (int c = 3; c < 6; ++c) w[arch.w1_offset() + r * 6 + c] = 0.0;
  CHECK(trace_jacobian_v(arch, w, {{1, 2, 3}, {4, 5, 6}}) == 0.0);
}

TEST_CASE("free motion under a zero field") {
  const FieldArchitecture arch{2, 3};
  const std::vector<double> w(arch.weight_count(), 0.0);
  const auto times = frame_index_times(10);
  const auto traj = integrate(arch, {{1.0, -2.0}, {0.5, 0.25}}, -1.5, w, times, 10);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(traj.states[i].s[0] == doctest::Approx(1.0 + 0.5 * times[i]).epsilon(1e-13));
    CHECK(traj.states[i].s[1] == doctest::Approx(-2.0 + 0.25 * times[i]).epsilon(1e-13));
    CHECK(traj.states[i].v[0] == 0.5);
    CHECK(traj.log_q[i] == -1.5);
  }
}

TEST_CASE("harmonic oscillator: s(pi) = -1 and fourth-order convergence") {
  CHECK(harmonic_error(32) < 1e-5);
  for (int steps : {4, 8, 16}) {
    const double ratio = harmonic_error(steps) / harmonic_error(2 * steps);
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
  }
}

TEST_CASE("density flow for a linear field") {
  const FieldArchitecture arch{2, 4};
  const std::vector<std::vector<double>> A{{-1.0, 0.0}, {0.0, -0.5}}, B{{-0.1, 0.3}, {0.0, 0.05}};
  const auto w = testing::linear_field(arch, A, B);
  const std::vector<double> times{0.0, 1.0, 2.0, 3.0, 4.0, 5.0};
  const auto traj = integrate(arch, {{0.5, -0.5}, {0.2, 0.1}}, 0.0, w, times, 10);
  for (std::size_t i = 0; i < times.size(); ++i)
    CHECK(std::abs(traj.log_q[i] - (-times[i] * (-0.05))) <= 1e-4);
}

TEST_CASE("v-independent field keeps log q constant") {
  std::mt19937_64 rng(4);
  const FieldArchitecture arch{3, 6};
  auto w = random_weights(arch, rng);
  for (int r = 0; r < 6; ++r)
    for (int c = 3; c < 6; ++c) w[arch.w1_offset() + r * 6 + c] = 0.0;
  const auto traj = integrate(arch, {{0.1, 0.2, 0.3}, {0.0, 0.1, -0.1}}, 2.0, w,
                              frame_index_times(10), 10);
  for (double lq : traj.log_q) CHECK(std::abs(lq - 2.0) <= 1e-10);
}

TEST_CASE("graph and plain integrators agree") {
  std::mt19937_64 rng(5);
  const FieldArchitecture arch{2, 6};
  const auto w = random_weights(arch, rng);
  const LatentState z0{{0.3, -0.2}, {0.1, 0.4}};
  const auto times = frame_index_times(5);
  const auto plain = integrate(arch, z0, 0.7, w, times, 4);
  ad::Tape tape;
  const auto fv = bind_field(arch, tape.constant(ad::Tensor::vector(w)));
  const auto graph =
      integrate(fv, tape.constant(ad::Tensor::vector(z0.s)), tape.constant(ad::Tensor::vector(z0.v)),
                tape.constant(ad::Tensor::scalar(0.7)), times, 4, true);
  for (std::size_t i = 0; i < times.size(); ++i) {
    for (int d = 0; d < 2; ++d) {
      CHECK(graph.s[i].value().data[d] == doctest::Approx(plain.states[i].s[d]).epsilon(1e-12));
      CHECK(graph.v[i].value().data[d] == doctest::Approx(plain.states[i].v[d]).epsilon(1e-12));
      CHECK(graph.accel[i].value().data[d] == doctest::Approx(plain.accels[i][d]).epsilon(1e-12));
    }
    CHECK(graph.log_q[i].item() == doctest::Approx(plain.log_q[i]).epsilon(1e-12));
  }
}

TEST_CASE("gradient through the unrolled integrator matches finite differences") {
  std::mt19937_64 rng(6);
  const FieldArchitecture arch{2, 4};
  auto f = [&arch](ad::Tape&, const std::vector<ad::Var>& v) {
    const auto fv = bind_field(arch, v[0]);
    const auto tr = integrate(fv, v[1], v[2], v[3], frame_index_times(4), 3);
    return ad::sum(tr.s.back()) + ad::dot(tr.v.back(), tr.v.back()) + tr.log_q.back() * 0.5;
  };
  auto r = testing::check_gradient(
      f, {testing::random_tensor({static_cast<int>(arch.weight_count())}, rng, 0.4),
          testing::random_tensor({2}, rng), testing::random_tensor({2}, rng),
          testing::random_tensor({1}, rng)},
      1e-4);
  CHECK(r.failed == 0);
}

TEST_CASE("divergence is reported with its time") {
  const FieldArchitecture arch{1, 2};
  std::vector<double> w(arch.weight_count(), 0.0);
  w[arch.b3_offset()] = 1e308;
  try {
    integrate(arch, {{0.0}, {0.0}}, 0.0, w, frame_index_times(5), 2);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.time() <= 4.0);
  }
}

TEST_CASE("errors") {
  const FieldArchitecture arch{2, 3};
  const std::vector<double> w(arch.weight_count() - 1, 0.0);
  CHECK_THROWS_AS(eval_field(arch, w, {{0, 0}, {0, 0}}), DimensionError);
  const std::vector<double> w2(arch.weight_count(), 0.0);
  CHECK_THROWS_AS(eval_field(arch, w2, {{0}, {0, 0}}), DimensionError);
  const std::vector<double> bad_times{0.0, 1.0, 1.0};
  CHECK_THROWS_AS(integrate(arch, {{0, 0}, {0, 0}}, 0.0, w2, bad_times, 1), ConfigError);
  CHECK_THROWS_AS(integrate(arch, {{0, 0}, {0, 0}}, 0.0, w2, frame_index_times(3), 0), ConfigError);
}
