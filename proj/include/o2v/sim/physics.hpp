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

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace o2v::sim {

using Rng = std::mt19937_64;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct BallWorldConfig {
  double box_side = 10.0;
  int n_balls = 1;
  double radius = 1.2;
  double mass = 1.0;
  double frame_dt = 1.0;
  double sim_dt = 0.5;
  int seq_len = 10;
  // Rejection-sampling budget for non-overlapping placement.
  int max_placement_attempts = 10000;

  // Fixed total kinetic energy every sequence is normalized to: n * 0.5 J.
  double target_energy() const { return 0.5 * n_balls; }
  void validate() const;
};

struct PendulumConfig {
  double box_side = 10.0;
  double bob_radius = 1.0;
  Interval rod_length_range{3.0, 6.0};
  Interval init_angle_range{std::numbers::pi / 36.0, std::numbers::pi / 9.0};
  double g = 9.91;
  double frame_dt = 0.4;
  int seq_len = 10;

  void validate() const;
};

struct ProjectileConfig {
  double box_side = 10.0;
  double radius = 1.0;
  Interval vx_range{1.0, 4.0};
  Interval vy_range{0.0, 1.0};
  Interval hy_range{1.0, 3.0};
  double restitution = 0.80;
  double contact_duration = 0.1;
  double frame_dt = 0.1;
  double g = 9.91;
  int seq_len = 10;

  void validate() const;
};

// Per-frame world state of every object plus ground-truth event frames.
struct WorldTrajectory {
  std::vector<double> times;
  std::vector<std::vector<Vec2>> centers;     // [frame][object]
  std::vector<std::vector<Vec2>> velocities;  // [frame][object]
  std::vector<int> events;                    // sorted, unique frame indices
  double radius = 0.0;
  // Physical times of every collision / contact start (bookkeeping).
  std::vector<double> event_times;

  int frames() const { return static_cast<int>(times.size()); }
};

// Generating parameters of the pendulum / projectile draws.
struct PendulumDraw {
  double rod_length = 0.0;
  double init_angle = 0.0;  // signed
};

struct ProjectileDraw {
  double vx = 0.0;
  double vy = 0.0;
  double hy = 0.0;
};

double kinetic_energy(std::span<const Vec2> velocities, double mass);

struct BallState {
  std::vector<Vec2> centers;
  std::vector<Vec2> velocities;
};

// Non-overlapping uniform placement and standard-normal velocities rescaled
// to the target kinetic energy. Throws PlacementError.
BallState sample_ball_initial_state(const BallWorldConfig& config, Rng& rng);

WorldTrajectory simulate_bouncing_balls(const BallWorldConfig& config, Rng& rng);
// Exact event-driven simulation from a given state over seq_len frames.
WorldTrajectory simulate_bouncing_balls_from(const BallWorldConfig& config,
                                             const BallState& initial);
// Advances a ball state by `duration` seconds of exact dynamics. Collision
// times inside the window are appended to `collision_times` when non-null.
void advance_balls(const BallWorldConfig& config, BallState& state,
                   double duration, std::vector<double>* collision_times);

PendulumDraw sample_pendulum(const PendulumConfig& config, Rng& rng);
WorldTrajectory simulate_pendulum(const PendulumConfig& config, Rng& rng);
WorldTrajectory simulate_pendulum_from(const PendulumConfig& config,
                                       const PendulumDraw& draw);
// Signed angle of the small-angle solution at time t.
double pendulum_angle(const PendulumConfig& config, const PendulumDraw& draw,
                      double t);

ProjectileDraw sample_projectile(const ProjectileConfig& config, Rng& rng);
WorldTrajectory simulate_projectile(const ProjectileConfig& config, Rng& rng);
WorldTrajectory simulate_projectile_from(const ProjectileConfig& config,
                                         const ProjectileDraw& draw);

// Contact intervals of a projectile draw within [0, horizon], each with the
// vertical speed just before impact and just after release.
struct Bounce {
  double impact_time = 0.0;
  double release_time = 0.0;
  double speed_in = 0.0;
  double speed_out = 0.0;
};
std::vector<Bounce> projectile_bounces(const ProjectileConfig& config,
                                       const ProjectileDraw& draw,
                                       double horizon);

}  // namespace o2v::sim
