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

#include "doctest.h"
#include "fixtures.hpp"
#include "o2v/common.hpp"
#include "o2v/objective/objective.hpp"

using namespace o2v;
using namespace o2v::objective;
using model::DiagonalGaussian;
using model::VariationalModel;

TEST_CASE("kl_diag_gaussian closed-form examples") {
  const DiagonalGaussian p{{0.0}, {0.0}};
  CHECK(kl_diag_gaussian(p, p) == 0.0);
  CHECK(kl_diag_gaussian(DiagonalGaussian{{1.0}, {0.0}}, p) == doctest::Approx(0.5).epsilon(1e-15));
  const double e2 = std::exp(2.0);
  CHECK(kl_diag_gaussian(DiagonalGaussian{{0.0}, {1.0}}, p) == doctest::Approx((e2 - 3.0) / 2.0).epsilon(1e-14));
  CHECK(kl_diag_gaussian(DiagonalGaussian{{0.0}, {1.0}}, p) == doctest::Approx(2.1945).epsilon(1e-4));
  CHECK_THROWS_AS(kl_diag_gaussian(DiagonalGaussian{{0.0, 1.0}, {0.0, 0.0}}, p), DimensionError);
}

TEST_CASE("kl_diag_gaussian is non-negative and zero only at equality") {
  model::Rng rng(1);
  std::normal_distribution<double> n;
  for (int t = 0; t < 10000; ++t) {
    DiagonalGaussian q, p;
    for (int d = 0; d < 4; ++d) {
      q.mean.push_back(n(rng));
      q.log_std.push_back(0.5 * n(rng));
      p.mean.push_back(n(rng));
      p.log_std.push_back(0.5 * n(rng));
    }
    CHECK(kl_diag_gaussian(q, p) > 0.0);
    CHECK(kl_diag_gaussian(q, q) == 0.0);
  }
}

TEST_CASE("kl_diag_gaussian matches Monte Carlo") {
  model::Rng rng(2);
  std::normal_distribution<double> n;
  for (int t = 0; t < 5; ++t) {
    DiagonalGaussian q, p;
    for (int d = 0; d < 5; ++d) {
      q.mean.push_back(n(rng));
      q.log_std.push_back(0.3 * n(rng));
      p.mean.push_back(n(rng));
      p.log_std.push_back(0.3 * n(rng));
    }
    const int samples = 200000;
    double sum = 0, sq = 0;
    for (int i = 0; i < samples; ++i) {
      const auto s = model::sample_gaussian(q, rng);
      const double r = s.log_density - model::gaussian_log_density(p, s.value);
      sum += r;
      sq += r * r;
    }
    const double mean = sum / samples;
    const double se = std::sqrt((sq / samples - mean * mean) / samples);
    CHECK(std::abs(mean - kl_diag_gaussian(q, p)) <= 3.0 * se);
  }
}

TEST_CASE("beta_W defaults to a / |W|") {
  model::NetworkConfig c;
  const auto p = PenaltyConfig::for_network(c);
  CHECK(p.beta_w == doctest::Approx(3.0 / 3053.0).epsilon(1e-15));
  CHECK(p.gamma == 1.0);
  // Formula example: a = 3 with a 5000-weight field gives 0.0006.
  CHECK(3.0 / 5000.0 == doctest::Approx(0.0006).epsilon(1e-12));
  PenaltyConfig bad;
  bad.gamma = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.gamma = 1.0;
  bad.beta_w = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ELBO accounting identities") {
  const auto cfg = testing::mini_config();
  VariationalModel m(cfg, 3);
  const auto seq = testing::random_sequence(8, 6, 4);
  ElboOptions o;
  o.steps_per_frame = 3;
  o.penalty = PenaltyConfig::for_network(cfg);
  model::Rng rng(5);
  const auto b = elbo(m, seq, rng, o);
  CHECK(std::abs(b.total - (b.ode_regularization + b.vae_loss + b.dynamic_loss)) <= 1e-8);
  CHECK(std::isfinite(b.penalized_total));
  CHECK(b.reused_windows == 2);
  CHECK(b.truncated);

  o.penalty.gamma = 0.0;
  o.penalty.beta_w = 1.0;
  model::Rng r1(6), r2(6);
  const auto c = elbo(m, seq, r1, o);
  CHECK(std::abs(c.penalized_total - c.total) <= 1e-8);
  CHECK(std::abs(penalized_elbo(m, seq, r2, o) - c.total) <= 1e-8);

  o.mc_samples = 4;
  model::Rng r3(7);
  const auto d = elbo(m, seq, r3, o);
  CHECK(std::abs(d.total - (d.ode_regularization + d.vae_loss + d.dynamic_loss)) <= 1e-8);
}

TEST_CASE("q(W) equal to the prior gives zero ODE regularization") {
  const auto cfg = testing::mini_config();
  VariationalModel m(cfg, 3);
  auto& mean = m.params().at("ode.mean").values;
  auto& ls = m.params().at("ode.log_std").values;
  std::fill(mean.begin(), mean.end(), 0.0);
  std::fill(ls.begin(), ls.end(), 0.0);
  model::Rng rng(1);
  ElboOptions o;
  o.steps_per_frame = 2;
  CHECK(elbo(m, testing::random_sequence(8, 4, 1), rng, o).ode_regularization == 0.0);
}

TEST_CASE("consistency term vanishes when encoder and ODE densities coincide") {
  // Encoders output N(0, 1) for positions and a point mass at 0 for velocities;
  // the field is numerically zero, so z_i = z_0 in distribution.
  const auto cfg = testing::mini_config();
  VariationalModel m(cfg, 3);
  for (auto& e : m.params().entries()) {
    if (e.name.rfind("pos.head", 0) == 0 || e.name.rfind("vel.head", 0) == 0)
      std::fill(e.values.begin(), e.values.end(), 0.0);
  }
  auto& vb = m.params().at("vel.head.b").values;
  for (int i = 0; i < cfg.latent_dim; ++i) vb[cfg.latent_dim + i] = -30.0;
  auto& mean = m.params().at("ode.mean").values;
  auto& ls = m.params().at("ode.log_std").values;
  std::fill(mean.begin(), mean.end(), 0.0);
  std::fill(ls.begin(), ls.end(), -60.0);
  ElboOptions o;
  o.steps_per_frame = 2;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    model::Rng rng(seed);
    const auto b = elbo(m, testing::random_sequence(8, 6, seed), rng, o);
    CHECK(std::abs(b.consistency) <= 1e-9);
  }
}

TEST_CASE("penalized ELBO gradient matches central finite differences") {
  const auto cfg = testing::mini_config(2);
  VariationalModel m(cfg, 21);
  const auto seq = testing::random_sequence(8, 5, 22);
  ElboOptions o;
  o.steps_per_frame = 2;
  o.penalty = PenaltyConfig::for_network(cfg);
  const std::uint64_t seed = 23;

  m.params().zero_grad();
  {
    model::Rng rng(seed);
    accumulate_gradient(m, seq, rng, o, 1.0);
  }
  auto value = [&] {
    model::Rng rng(seed);
    return penalized_elbo(m, seq, rng, o);
  };
  std::size_t checked = 0, passed = 0;
  for (auto& e : m.params().entries()) {
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      const double x0 = e.values[i], h = 1e-5 * std::max(1.0, std::abs(x0));
      e.values[i] = x0 + h;
      const double fp = value();
      e.values[i] = x0 - h;
      const double fm = value();
      e.values[i] = x0;
      const double fd = (fp - fm) / (2 * h);
      const double g = -e.grads[i];  // grads hold d(-objective)
      const double scale = std::max({std::abs(g), std::abs(fd), 1e-6});
      ++checked;
      passed += std::abs(g - fd) <= 1e-4 * scale;
    }
  }
  MESSAGE("gradient audit: " << passed << " / " << checked);
  CHECK(static_cast<double>(passed) >= 0.99 * static_cast<double>(checked));
}

TEST_CASE("short sequences are rejected") {
  const auto cfg = testing::mini_config();
  VariationalModel m(cfg, 3);
  model::Rng rng(1);
  ElboOptions o;
  CHECK_THROWS_AS(elbo(m, testing::random_sequence(8, 2, 1), rng, o), DimensionError);
}
