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


#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fixtures.hpp"
#include "o2v/common.hpp"
#include "o2v/metrics/metrics.hpp"

using namespace o2v;
using namespace o2v::metrics;
using o2v::testing::mini_config;
using o2v::testing::random_sequence;

namespace {

void fill(model::VariationalModel& m, const std::string& name, double v) {
  auto& e = m.params().at(name);
  std::fill(e.values.begin(), e.values.end(), v);
}

// Encoder heads output a fixed Gaussian, q(W) equals the prior, and the
// decoder ignores the latent state.
model::VariationalModel degenerate_model(int a) {
  model::VariationalModel m(mini_config(a), 5);
  for (const char* n : {"pos.head.w", "pos.head.b", "vel.head.w", "vel.head.b", "ode.mean",
                        "ode.log_std", "dec.fc.w"})
    fill(m, n, 0.0);
  return m;
}

}  // namespace

TEST_CASE("pixel_mse and psnr") {
  data::Frame a(4), b(4);
  b.pixels[0] = 0.4;
  b.pixels[5] = -0.2;
  CHECK(pixel_mse(a, b) == doctest::Approx((0.16 + 0.04) / 16.0).epsilon(1e-15));
  CHECK(pixel_mse(a, a) == 0.0);
  CHECK_THROWS_AS(pixel_mse(a, data::Frame(8)), DimensionError);
  std::vector<data::Frame> xs{a, b}, ys{a};
  CHECK_THROWS_AS(pixel_mse(xs, ys), DimensionError);

  CHECK(*psnr(0.01) == doctest::Approx(20.0).epsilon(1e-14));
  CHECK(*psnr(1.0) == 0.0);
  CHECK_FALSE(psnr(0.0).has_value());
  for (double m : {0.3, 1e-3, 2.5e-5})
    CHECK(std::abs(*psnr(m) - 10.0 * std::log10(1.0 / m)) < 1e-10);
}

TEST_CASE("mean_std and log_mean_exp") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto s = mean_std(x);
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(1.25)));
  std::vector<double> one{7.0};
  CHECK(mean_std(one).std == 0.0);

  std::vector<double> y{-1.0, 0.5, 2.0};
  const double naive = std::log((std::exp(-1.0) + std::exp(0.5) + std::exp(2.0)) / 3.0);
  CHECK(log_mean_exp(y) == doctest::Approx(naive).epsilon(1e-14));
  std::vector<double> big{-5000.0, -5001.0};
  CHECK(log_mean_exp(big) ==
        doctest::Approx(-5000.0 + std::log((1.0 + std::exp(-1.0)) / 2.0)).epsilon(1e-14));
}

TEST_CASE("event windows") {
  std::vector<int> e4{4}, e23{2, 3};
  CHECK(expand_event_windows(e4, 3, 10) == std::vector<int>{3, 4, 5});
  CHECK(expand_event_windows(e23, 3, 10) == std::vector<int>{1, 2, 3, 4});
  std::vector<int> e0{0};
  CHECK(expand_event_windows(e0, 3, 10) == std::vector<int>{0, 1});
  std::vector<int> e9{9};
  CHECK(expand_event_windows(e9, 3, 10) == std::vector<int>{8, 9});
  std::vector<int> e{3, 4};
  CHECK(expand_event_windows(e, 3, 10) == std::vector<int>{2, 3, 4, 5});
  CHECK(expand_event_windows(e, 5, 10) == std::vector<int>{1, 2, 3, 4, 5, 6});
  CHECK(expand_event_windows(e, 1, 10) == std::vector<int>{3, 4});
  CHECK(expand_event_windows(std::vector<int>{}, 3, 10).empty());
  CHECK_THROWS_AS(expand_event_windows(e, 4, 10), ConfigError);
  CHECK_THROWS_AS(expand_event_windows(e, 0, 10), ConfigError);
}

TEST_CASE("norm breakdown pools every value once") {
  std::vector<std::vector<double>> v{{1, 2, 3, 4}, {5, 6, 7, 8}};
  std::vector<std::vector<int>> w{{1, 2}, {}};
  const auto b = norm_breakdown(v, w);
  CHECK(b.event.count + b.non_event.count == 8);
  CHECK(b.event.count == 2);
  CHECK(b.event.stats.mean == 2.5);
  CHECK(b.non_event.stats.mean == doctest::Approx((1 + 4 + 5 + 6 + 7 + 8) / 6.0));

  std::vector<std::vector<int>> none{{}, {}};
  const auto e = norm_breakdown(v, none);
  CHECK(e.event.empty());
  CHECK_FALSE(e.non_event.empty());
  CHECK_THROWS_AS(norm_breakdown(v, std::vector<std::vector<int>>{{}}), DimensionError);
}

TEST_CASE("degenerate model: NLL is the constant-decoder log-likelihood for every L") {
  const auto m = degenerate_model(2);
  const auto seq = random_sequence(8, 6, 11);
  const std::vector<double> s{0.3, -0.7};
  const auto p = model::decode(m, s);
  double ll = 0.0;
  for (const auto& f : seq.frames) ll += model::bernoulli_log_likelihood(f, p);

  std::vector<double> got;
  for (int L : {1, 3, 17}) {
    Rng rng(100 + L);
    const double nll = nll_importance(m, seq, L, rng);
    CHECK(nll == doctest::Approx(-ll).epsilon(1e-10));
    got.push_back(nll);
  }
  CHECK(got[0] == got[1]);
  CHECK(got[1] == got[2]);
}

TEST_CASE("posterior samples: zero field keeps velocity constant") {
  auto m = degenerate_model(3);
  fill(m, "ode.log_std", -60.0);
  auto& vb = m.params().at("vel.head.b").values;
  vb = {3.0, 4.0, 0.0, -40.0, -40.0, -40.0};
  const auto seq = random_sequence(8, 7, 2);
  Rng rng(9);
  const auto samples = posterior_samples(m, seq, 4, rng);
  const auto n = latent_norms(samples);
  REQUIRE(n.velocity.size() == 7);
  for (std::size_t t = 0; t < 7; ++t) {
    CHECK(n.velocity[t].mean == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(n.velocity[t].std < 1e-9);
    CHECK(n.acceleration[t].mean < 1e-12);
  }
  // Position follows s0 + t v.
  const auto& st = samples[0].trajectory.states;
  CHECK(st[6].s[0] - st[0].s[0] == doctest::Approx(18.0).epsilon(1e-9));
  CHECK(st[6].s[1] - st[0].s[1] == doctest::Approx(24.0).epsilon(1e-9));
}

TEST_CASE("mean prediction averages decoded frames") {
  model::VariationalModel m(mini_config(2), 3);
  const auto seq = random_sequence(8, 5, 4);
  Rng rng(1);
  const auto samples = posterior_samples(m, seq, 3, rng);
  const auto pred = mean_prediction(samples);
  for (std::size_t t = 0; t < 5; ++t) {
    const auto direct = model::decode(m, samples[1].trajectory.states[t].s);
    CHECK(samples[1].probs[t].pixels[7] == doctest::Approx(direct.pixels[7]).epsilon(1e-12));
    const double avg =
        (samples[0].probs[t].pixels[9] + samples[1].probs[t].pixels[9] +
         samples[2].probs[t].pixels[9]) / 3.0;
    CHECK(pred[t].pixels[9] == doctest::Approx(avg).epsilon(1e-14));
  }
}

TEST_CASE("importance-weighted NLL does not grow with L") {
  model::VariationalModel m(mini_config(2), 8);
  auto& ls = m.params().at("ode.log_std").values;
  std::fill(ls.begin(), ls.end(), -1.0);
  const auto seq = random_sequence(8, 5, 6);
  std::vector<double> d;
  for (int seed = 0; seed < 20; ++seed) {
    Rng r1(seed), r2(seed + 1000);
    d.push_back(nll_importance(m, seq, 1, r1) - nll_importance(m, seq, 30, r2));
  }
  std::nth_element(d.begin(), d.begin() + 10, d.end());
  CHECK(d[10] >= 0.0);
}

TEST_CASE("evaluate: deterministic report with consistent PSNR") {
  model::VariationalModel m(mini_config(2), 12);
  std::vector<data::Sequence> test;
  for (int i = 0; i < 3; ++i) {
    auto s = random_sequence(8, 6, 20 + i);
    s.events = {i + 1};
    test.push_back(s);
  }
  EvalOptions o;
  o.samples = 4;
  o.seed = 77;
  const auto r1 = evaluate(m, test, o, "toy");
  const auto r2 = evaluate(m, test, o, "toy");
  CHECK(to_json(r1).dump() == to_json(r2).dump());
  o.seed = 78;
  CHECK(to_json(evaluate(m, test, o, "toy")).dump() != to_json(r1).dump());

  const auto j = to_json(r1);
  CHECK(j["num_cases"] == 3);
  CHECK(j["per_time"].size() == 6);
  for (const auto& c : j["cases"])
    for (std::size_t t = 0; t < 6; ++t) {
      const double mse = c["mse"][t];
      CHECK(std::abs(c["psnr"][t].get<double>() - 10.0 * std::log10(1.0 / mse)) < 1e-10);
    }
  for (const auto& p : j["per_time"]) {
    CHECK(p["mse"]["std"].get<double>() >= 0.0);
    CHECK(std::abs(p["psnr_of_mean_mse"].get<double>() -
                   10.0 * std::log10(1.0 / p["mse"]["mean"].get<double>())) < 1e-10);
  }
  const auto& b = j["event_breakdown"]["acceleration"];
  CHECK(b["event"]["count"].get<int>() + b["non_event"]["count"].get<int>() == 18);
  CHECK(b["event"]["count"] == 9);

  // Head MSE is the mean of the first five per-case errors.
  double h = 0.0;
  for (const auto& c : r1.cases)
    for (int t = 0; t < 5; ++t) h += c.mse[t];
  CHECK(r1.head_mse.mean == doctest::Approx(h / 15.0).epsilon(1e-14));

  // Case streams are independent of the split size.
  EvalOptions one = o;
  one.seed = 77;
  one.limit = 1;
  const auto r3 = evaluate(m, test, one, "toy");
  CHECK(r3.cases.size() == 1);
  CHECK(r3.cases[0].nll == r1.cases[0].nll);

  EvalOptions bad = o;
  bad.event_window = 2;
  CHECK_THROWS_AS(evaluate(m, test, bad), ConfigError);
}

TEST_CASE("breakdown edge cases: all frames in windows, constant values") {
  const auto all = norm_breakdown({{1.0, 3.0}}, {{0, 1}});
  CHECK(all.non_event.empty());
  CHECK(all.event.count == 2);
  CHECK(all.event.stats.mean == 2.0);
  CHECK(all.event.stats.std == 1.0);
  const auto flat = norm_breakdown({{0.7, 0.7, 0.7, 0.7}}, {{2}});
  CHECK(flat.event.stats.std == 0.0);
  CHECK(flat.non_event.stats.std == 0.0);
  CHECK(flat.non_event.count == 3);
}
