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
#include "o2v/common.hpp"
#include "o2v/sim/physics.hpp"

using namespace o2v;
using namespace o2v::sim;

TEST_CASE("kinetic_energy") {
  const std::vector<Vec2> zero{{0, 0}};
  CHECK(kinetic_energy(zero, 1.0) == 0.0);
  const std::vector<Vec2> one{{1, 0}};
  CHECK(kinetic_energy(one, 1.0) == 0.5);
  const std::vector<Vec2> two{{3, 4}, {0, 0}};
  CHECK(kinetic_energy(two, 1.0) == 12.5);
}

TEST_CASE("initial ball states hit the target energy and do not overlap") {
  for (int n : {1, 2, 3}) {
    BallWorldConfig c;
    c.n_balls = n;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const auto s = sample_ball_initial_state(c, rng);
      CHECK(kinetic_energy(s.velocities, c.mass) == doctest::Approx(0.5 * n).epsilon(1e-12));
      for (int i = 0; i < n; ++i) {
        CHECK(s.centers[i].x >= c.radius);
        CHECK(s.centers[i].x <= c.box_side - c.radius);
        for (int j = i + 1; j < n; ++j) {
          const Vec2 d = s.centers[i] - s.centers[j];
          CHECK(std::sqrt(dot(d, d)) > 2.0 * c.radius);
        }
      }
    }
  }
  BallWorldConfig c;
  c.n_balls = 2;
  Rng a(7), b(7);
  const auto s1 = sample_ball_initial_state(c, a);
  const auto s2 = sample_ball_initial_state(c, b);
  CHECK(s1.centers == s2.centers);
  CHECK(s1.velocities == s2.velocities);
}

TEST_CASE("placement failure is signalled") {
  BallWorldConfig c;
  c.n_balls = 40;
  c.max_placement_attempts = 50;
  Rng rng(1);
  CHECK_THROWS_AS(sample_ball_initial_state(c, rng), PlacementError);
}

TEST_CASE("single ball reflects off the right wall") {
  BallWorldConfig c;
  BallState s{{{5.0, 5.0}}, {{1.0, 0.0}}};
  const auto t = simulate_bouncing_balls_from(c, s);
  REQUIRE(t.frames() == 10);
  for (int k = 0; k <= 3; ++k) {
    CHECK(t.centers[k][0].x == doctest::Approx(5.0 + k).epsilon(1e-12));
    CHECK(t.centers[k][0].y == doctest::Approx(5.0).epsilon(1e-12));
  }
  // Wall contact at x = 8.8, t = 3.8: the ball is at 8.6 moving left at frame 4.
  CHECK(t.centers[4][0].x == doctest::Approx(8.6).epsilon(1e-12));
  CHECK(t.velocities[4][0].x == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(t.events.size() >= 1);
  CHECK(t.events.front() == 4);
}

TEST_CASE("head-on equal-mass collision swaps velocities") {
  BallWorldConfig c;
  c.n_balls = 2;
  BallState s{{{3.0, 5.0}, {7.0, 5.0}}, {{1.0, 0.0}, {-1.0, 0.0}}};
  const auto t = simulate_bouncing_balls_from(c, s);
  // Contact when the gap closes to 2r = 2.4: t = 0.8.
  CHECK(t.velocities[1][0].x == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(t.velocities[1][1].x == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.centers[1][0].x == doctest::Approx(3.8 - 0.2).epsilon(1e-12));
  CHECK(t.events.front() == 1);
}

TEST_CASE("energy conservation, containment, determinism") {
  for (int n : {1, 2, 3}) {
    BallWorldConfig c;
    c.n_balls = n;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed), rng2(seed);
      const auto t = simulate_bouncing_balls(c, rng);
      for (int f = 0; f < t.frames(); ++f) {
        CHECK(std::abs(kinetic_energy(t.velocities[f], c.mass) - c.target_energy()) <
              1e-9 * c.target_energy());
        for (const auto& p : t.centers[f]) {
          CHECK(p.x >= c.radius - 1e-12);
          CHECK(p.x <= c.box_side - c.radius + 1e-12);
          CHECK(p.y >= c.radius - 1e-12);
          CHECK(p.y <= c.box_side - c.radius + 1e-12);
        }
      }
      for (int e : t.events) {
        CHECK(e >= 0);
        CHECK(e < c.seq_len);
      }
      const auto t2 = simulate_bouncing_balls(c, rng2);
      CHECK(t.centers == t2.centers);
    }
  }
}

TEST_CASE("bouncing balls are time-reversible") {
  BallWorldConfig c;
  c.n_balls = 3;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const BallState s0 = sample_ball_initial_state(c, rng);
    BallState s = s0;
    advance_balls(c, s, 9.0, nullptr);
    for (auto& v : s.velocities) v = -1.0 * v;
    advance_balls(c, s, 9.0, nullptr);
    for (int i = 0; i < c.n_balls; ++i) {
      CHECK(std::abs(s.centers[i].x - s0.centers[i].x) < 1e-6);
      CHECK(std::abs(s.centers[i].y - s0.centers[i].y) < 1e-6);
    }
  }
}

TEST_CASE("pendulum closed form") {
  PendulumConfig c;
  const PendulumDraw d{4.0, std::numbers::pi / 18.0};
  const auto t = simulate_pendulum_from(c, d);
  CHECK(t.centers[0][0].x == doctest::Approx(5.0 + 4.0 * std::sin(std::numbers::pi / 18.0)).epsilon(1e-14));
  CHECK(t.centers[0][0].y == doctest::Approx(10.0 - 4.0 * std::cos(std::numbers::pi / 18.0)).epsilon(1e-14));
  // First direction change at pi sqrt(4 / 9.91) = 1.996 s, frame 5 at 0.4 s/frame.
  CHECK(std::count(t.events.begin(), t.events.end(), 5) == 1);
  CHECK(t.events.front() == 0);
  const double half = std::numbers::pi * std::sqrt(4.0 / 9.91);
  CHECK(pendulum_angle(c, d, half) == doctest::Approx(-d.init_angle).epsilon(1e-15));
  const double w = std::sqrt(9.91 / 4.0);
  for (int f = 0; f < t.frames(); ++f) {
    const double a = d.init_angle * std::cos(w * t.times[f]);
    CHECK(std::abs(pendulum_angle(c, d, t.times[f]) - a) <= 1e-12);
    CHECK(std::abs(t.centers[f][0].x - (5.0 + 4.0 * std::sin(a))) <= 1e-12);
  }
}

TEST_CASE("pendulum sampling ranges") {
  PendulumConfig c;
  Rng rng(3);
  bool neg = false, pos = false;
  for (int i = 0; i < 200; ++i) {
    const auto d = sample_pendulum(c, rng);
    CHECK(d.rod_length >= 3.0);
    CHECK(d.rod_length <= 6.0);
    CHECK(std::abs(d.init_angle) >= std::numbers::pi / 36.0);
    CHECK(std::abs(d.init_angle) <= std::numbers::pi / 9.0);
    (d.init_angle < 0 ? neg : pos) = true;
  }
  CHECK(neg);
  CHECK(pos);
}

TEST_CASE("projectile impact time and restitution") {
  ProjectileConfig c;
  const ProjectileDraw d{2.0, 0.5, 2.0};
  const auto b = projectile_bounces(c, d, 10.0);
  REQUIRE(!b.empty());
  // Independent root of g/2 t^2 - vy t - (h - r) = 0 via the alternative form.
  const double disc = 0.25 + 2.0 * 9.91 * 1.0;
  const double root = 2.0 * 1.0 / (std::sqrt(disc) - 0.5);
  CHECK(b[0].impact_time == doctest::Approx(root).epsilon(1e-12));
  for (const auto& x : b) CHECK(std::abs(x.speed_out - 0.8 * x.speed_in) <= 1e-9);
  CHECK(std::abs(b[0].speed_in - std::abs(0.5 - 9.91 * root)) <= 1e-9);
}

TEST_CASE("projectile resting at the floor at t = 0") {
  ProjectileConfig c;
  const ProjectileDraw d{2.0, 0.0, c.radius};
  const auto t = simulate_projectile_from(c, d);
  REQUIRE(!t.events.empty());
  CHECK(t.events.front() == 0);
  CHECK(t.centers[0][0].y == c.radius);
  CHECK(t.velocities[0][0].x == 0.0);
  CHECK(t.velocities[0][0].y == 0.0);
}

TEST_CASE("projectile stays in the box") {
  ProjectileConfig c;
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto t = simulate_projectile(c, rng);
    for (const auto& f : t.centers) {
      CHECK(f[0].x >= c.radius - 1e-12);
      CHECK(f[0].x <= c.box_side - c.radius + 1e-12);
      CHECK(f[0].y >= c.radius - 1e-12);
    }
  }
}

TEST_CASE("config validation") {
  BallWorldConfig c;
  c.radius = 6.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  BallWorldConfig d;
  d.sim_dt = 0.3;
  CHECK_THROWS_AS(d.validate(), ConfigError);
  ProjectileConfig p;
  p.restitution = 1.2;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
