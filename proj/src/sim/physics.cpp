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

#include "o2v/sim/physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "o2v/common.hpp"

namespace o2v::sim {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<int> sorted_unique(std::set<int> s) { return {s.begin(), s.end()}; }

// Frame i owns collisions in ((i-1)*dt, i*dt].
int frame_of_collision(double t, double frame_dt) {
  return static_cast<int>(std::ceil(t / frame_dt - 1e-9));
}

void check_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(std::string(name) + " must be positive and finite");
}

// Reflects an unbounded coordinate into [lo, hi]; returns the folded value
// and whether the direction is currently flipped.
std::pair<double, bool> fold(double x, double lo, double hi) {
  const double span = hi - lo;
  double u = std::fmod(x - lo, 2.0 * span);
  if (u < 0) u += 2.0 * span;
  if (u <= span) return {lo + u, false};
  return {lo + 2.0 * span - u, true};
}

}  // namespace

void BallWorldConfig::validate() const {
  check_positive(box_side, "box_side");
  check_positive(radius, "radius");
  check_positive(mass, "mass");
  check_positive(frame_dt, "frame_dt");
  check_positive(sim_dt, "sim_dt");
  if (!(box_side > 2.0 * radius)) throw ConfigError("box_side must exceed 2*radius");
  if (n_balls < 1) throw ConfigError("n_balls must be >= 1");
  if (seq_len < 2) throw ConfigError("seq_len must be >= 2");
  const double ratio = frame_dt / sim_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("sim_dt must divide frame_dt");
}

void PendulumConfig::validate() const {
  check_positive(box_side, "box_side");
  check_positive(bob_radius, "bob_radius");
  check_positive(g, "g");
  check_positive(frame_dt, "frame_dt");
  if (seq_len < 2) throw ConfigError("seq_len must be >= 2");
  if (!(rod_length_range.lo > 0.0) || rod_length_range.hi < rod_length_range.lo)
    throw ConfigError("invalid rod length range");
  if (!(rod_length_range.hi + bob_radius < box_side))
    throw ConfigError("rod_length + bob_radius must be below box_side");
  if (!(init_angle_range.lo > 0.0) || init_angle_range.hi < init_angle_range.lo ||
      !(init_angle_range.hi < std::numbers::pi / 2.0))
    throw ConfigError("initial angles must lie in (0, pi/2)");
}

void ProjectileConfig::validate() const {
  check_positive(box_side, "box_side");
  check_positive(radius, "radius");
  check_positive(g, "g");
  check_positive(frame_dt, "frame_dt");
  if (contact_duration < 0.0) throw ConfigError("contact_duration must be >= 0");
  if (seq_len < 2) throw ConfigError("seq_len must be >= 2");
  if (!(restitution > 0.0 && restitution < 1.0))
    throw ConfigError("restitution must lie in (0, 1)");
  if (hy_range.lo < radius || hy_range.hi > box_side - radius || hy_range.hi < hy_range.lo)
    throw ConfigError("hy_range must lie within [radius, box_side - radius]");
  if (vx_range.hi < vx_range.lo || vy_range.hi < vy_range.lo || vy_range.lo < 0.0)
    throw ConfigError("invalid velocity ranges");
}

double kinetic_energy(std::span<const Vec2> velocities, double mass) {
  double e = 0.0;
  for (Vec2 v : velocities) e += 0.5 * mass * dot(v, v);
  return e;
}

BallState sample_ball_initial_state(const BallWorldConfig& config, Rng& rng) {
  config.validate();
  const double lo = config.radius, hi = config.box_side - config.radius;
  std::uniform_real_distribution<double> pos(lo, hi);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double min_d2 = 4.0 * config.radius * config.radius;

  BallState s;
  int attempts = 0;
  while (static_cast<int>(s.centers.size()) < config.n_balls) {
    if (++attempts > config.max_placement_attempts)
      throw PlacementError("cannot place balls: " + std::to_string(config.n_balls) +
                           " balls of radius " + std::to_string(config.radius) +
                           " after " + std::to_string(config.max_placement_attempts) +
                           " attempts");
    const Vec2 c{pos(rng), pos(rng)};
    const bool clear = std::all_of(s.centers.begin(), s.centers.end(), [&](Vec2 o) {
      const Vec2 d = c - o;
      return dot(d, d) > min_d2;
    });
    if (clear) s.centers.push_back(c);
  }
  double e = 0.0;
  do {
    s.velocities.clear();
    for (int i = 0; i < config.n_balls; ++i) {
      const double vx = normal(rng);
      const double vy = normal(rng);
      s.velocities.push_back({vx, vy});
    }
    e = kinetic_energy(s.velocities, config.mass);
  } while (!(e > 0.0));
  const double k = std::sqrt(config.target_energy() / e);
  for (Vec2& v : s.velocities) v = k * v;
  return s;
}

void advance_balls(const BallWorldConfig& config, BallState& state, double duration,
                   std::vector<double>* collision_times) {
  const double lo = config.radius, hi = config.box_side - config.radius;
  const double contact2 = 4.0 * config.radius * config.radius;
  const std::size_t n = state.centers.size();
  auto& p = state.centers;
  auto& v = state.velocities;

  enum class Kind { kNone, kWallX, kWallY, kPair };
  double t = 0.0;
  for (int guard = 0; guard < 1000000; ++guard) {
    double best = kInf;
    Kind kind = Kind::kNone;
    std::size_t bi = 0, bj = 0;
    auto wall_time = [&](double x, double vx) {
      if (vx > 0.0) return x >= hi ? 0.0 : (hi - x) / vx;
      if (vx < 0.0) return x <= lo ? 0.0 : (lo - x) / vx;
      return kInf;
    };
    for (std::size_t i = 0; i < n; ++i) {
      const double tx = wall_time(p[i].x, v[i].x);
      if (tx < best) best = tx, kind = Kind::kWallX, bi = i;
      const double ty = wall_time(p[i].y, v[i].y);
      if (ty < best) best = ty, kind = Kind::kWallY, bi = i;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const Vec2 dp = p[j] - p[i];
        const Vec2 dv = v[j] - v[i];
        const double b = dot(dp, dv);
        if (b >= 0.0) continue;  // separating
        const double a = dot(dv, dv);
        const double c = dot(dp, dp) - contact2;
        double tc;
        if (c <= 0.0) {
          tc = 0.0;
        } else {
          const double disc = b * b - a * c;
          if (disc < 0.0) continue;
          // Numerically stable smaller root of a t^2 + 2 b t + c = 0.
          tc = c / (-b + std::sqrt(disc));
        }
        if (tc < best) best = tc, kind = Kind::kPair, bi = i, bj = j;
      }

    const double remaining = duration - t;
    if (kind == Kind::kNone || best > remaining) {
      for (std::size_t i = 0; i < n; ++i) p[i] = p[i] + remaining * v[i];
      return;
    }
    for (std::size_t i = 0; i < n; ++i) p[i] = p[i] + best * v[i];
    t += best;
    switch (kind) {
      case Kind::kWallX:
        p[bi].x = std::clamp(p[bi].x, lo, hi);
        v[bi].x = -v[bi].x;
        break;
      case Kind::kWallY:
        p[bi].y = std::clamp(p[bi].y, lo, hi);
        v[bi].y = -v[bi].y;
        break;
      case Kind::kPair: {
        const Vec2 d = p[bj] - p[bi];
        const double len = std::sqrt(dot(d, d));
        const Vec2 nrm{d.x / len, d.y / len};
        // Equal masses: exchange velocity components along the center line.
        const double rel = dot(v[bj] - v[bi], nrm);
        v[bi] = v[bi] + rel * nrm;
        v[bj] = v[bj] - rel * nrm;
        break;
      }
      case Kind::kNone:
        break;
    }
    if (collision_times != nullptr) collision_times->push_back(t);
  }
  throw Error("bouncing-balls simulation exceeded its event budget");
}

WorldTrajectory simulate_bouncing_balls_from(const BallWorldConfig& config,
                                             const BallState& initial) {
  config.validate();
  if (initial.centers.size() != initial.velocities.size())
    throw DimensionError("ball state: centers and velocities differ in length");
  WorldTrajectory traj;
  traj.radius = config.radius;
  BallState state = initial;
  const int substeps = static_cast<int>(std::lround(config.frame_dt / config.sim_dt));
  std::set<int> events;
  for (int f = 0; f < config.seq_len; ++f) {
    const double t0 = f * config.frame_dt;
    if (f > 0) {
      // Internal states at sim_dt resolution; exact between them.
      for (int s = 0; s < substeps; ++s) {
        std::vector<double> local;
        advance_balls(config, state, config.sim_dt, &local);
        const double base = (f - 1) * config.frame_dt + s * config.sim_dt;
        for (double lt : local) {
          const double abs_t = base + lt;
          traj.event_times.push_back(abs_t);
          const int frame = std::clamp(frame_of_collision(abs_t, config.frame_dt), 0,
                                       config.seq_len - 1);
          events.insert(frame);
        }
      }
    }
    traj.times.push_back(t0);
    traj.centers.push_back(state.centers);
    traj.velocities.push_back(state.velocities);
  }
  traj.events = sorted_unique(std::move(events));
  return traj;
}

WorldTrajectory simulate_bouncing_balls(const BallWorldConfig& config, Rng& rng) {
  return simulate_bouncing_balls_from(config, sample_ball_initial_state(config, rng));
}

PendulumDraw sample_pendulum(const PendulumConfig& config, Rng& rng) {
  config.validate();
  std::uniform_real_distribution<double> len(config.rod_length_range.lo,
                                             config.rod_length_range.hi);
  std::uniform_real_distribution<double> ang(config.init_angle_range.lo,
                                             config.init_angle_range.hi);
  std::bernoulli_distribution side(0.5);
  PendulumDraw d;
  d.rod_length = len(rng);
  d.init_angle = ang(rng);
  if (side(rng)) d.init_angle = -d.init_angle;
  return d;
}

double pendulum_angle(const PendulumConfig& config, const PendulumDraw& draw, double t) {
  const double omega = std::sqrt(config.g / draw.rod_length);
  return draw.init_angle * std::cos(omega * t);
}

WorldTrajectory simulate_pendulum_from(const PendulumConfig& config,
                                       const PendulumDraw& draw) {
  config.validate();
  WorldTrajectory traj;
  traj.radius = config.bob_radius;
  const double omega = std::sqrt(config.g / draw.rod_length);
  const Vec2 pivot{config.box_side / 2.0, config.box_side};
  const double l = draw.rod_length;
  for (int f = 0; f < config.seq_len; ++f) {
    const double t = f * config.frame_dt;
    const double a = draw.init_angle * std::cos(omega * t);
    const double adot = -draw.init_angle * omega * std::sin(omega * t);
    traj.times.push_back(t);
    traj.centers.push_back({{pivot.x + l * std::sin(a), pivot.y - l * std::cos(a)}});
    traj.velocities.push_back({{l * adot * std::cos(a), l * adot * std::sin(a)}});
  }
  // Direction changes at the turning points t = k*pi/omega, release included.
  std::set<int> events;
  const double horizon = (config.seq_len - 1) * config.frame_dt;
  for (int k = 0;; ++k) {
    const double t = k * std::numbers::pi / omega;
    const int frame = static_cast<int>(std::lround(t / config.frame_dt));
    if (frame > config.seq_len - 1 || t > horizon + 0.5 * config.frame_dt) break;
    traj.event_times.push_back(t);
    events.insert(frame);
  }
  traj.events = sorted_unique(std::move(events));
  return traj;
}

WorldTrajectory simulate_pendulum(const PendulumConfig& config, Rng& rng) {
  return simulate_pendulum_from(config, sample_pendulum(config, rng));
}

ProjectileDraw sample_projectile(const ProjectileConfig& config, Rng& rng) {
  config.validate();
  std::uniform_real_distribution<double> vx(config.vx_range.lo, config.vx_range.hi);
  std::uniform_real_distribution<double> vy(config.vy_range.lo, config.vy_range.hi);
  std::uniform_real_distribution<double> hy(config.hy_range.lo, config.hy_range.hi);
  ProjectileDraw d;
  d.vx = vx(rng);
  d.vy = vy(rng);
  d.hy = hy(rng);
  return d;
}

std::vector<Bounce> projectile_bounces(const ProjectileConfig& config,
                                       const ProjectileDraw& draw, double horizon) {
  std::vector<Bounce> out;
  double t = 0.0, y0 = draw.hy, vy0 = draw.vy;
  const double g = config.g;
  while (t <= horizon) {
    // Positive root of g/2 tau^2 - vy0 tau - (y0 - r) = 0.
    const double drop = std::max(y0 - config.radius, 0.0);
    const double tau = (vy0 + std::sqrt(vy0 * vy0 + 2.0 * g * drop)) / g;
    const double impact = t + tau;
    if (impact > horizon) break;
    Bounce b;
    b.impact_time = impact;
    b.release_time = impact + config.contact_duration;
    b.speed_in = std::abs(vy0 - g * tau);
    b.speed_out = config.restitution * b.speed_in;
    out.push_back(b);
    if (b.speed_out < 1e-9) break;  // comes to rest on the floor
    t = b.release_time;
    y0 = config.radius;
    vy0 = b.speed_out;
  }
  return out;
}

WorldTrajectory simulate_projectile_from(const ProjectileConfig& config,
                                         const ProjectileDraw& draw) {
  config.validate();
  WorldTrajectory traj;
  traj.radius = config.radius;
  const double horizon = (config.seq_len - 1) * config.frame_dt;
  const std::vector<Bounce> bounces = projectile_bounces(config, draw, horizon);
  const bool rests = !bounces.empty() && bounces.back().speed_out < 1e-9;
  const double lo = config.radius, hi = config.box_side - config.radius;
  std::set<int> events;
  for (const Bounce& b : bounces) traj.event_times.push_back(b.impact_time);

  for (int f = 0; f < config.seq_len; ++f) {
    const double t = f * config.frame_dt;
    // Flight segment containing t (or the contact interval holding it).
    double seg_start = 0.0, y0 = draw.hy, vy0 = draw.vy;
    bool in_contact = false;
    for (std::size_t k = 0; k < bounces.size(); ++k) {
      const Bounce& b = bounces[k];
      if (t + 1e-12 >= b.impact_time && t <= b.release_time + 1e-12) {
        in_contact = true;
        events.insert(f);
      }
      if (t >= b.release_time) {
        seg_start = b.release_time;
        y0 = config.radius;
        vy0 = b.speed_out;
      }
    }
    // Horizontal motion pauses while in contact.
    double moving = t;
    for (const Bounce& b : bounces)
      moving -= std::clamp(t - b.impact_time, 0.0, b.release_time - b.impact_time);
    const auto [x, flipped] = fold(lo + draw.vx * moving, lo, hi);

    Vec2 c{x, 0.0}, vel{0.0, 0.0};
    const bool resting = rests && t >= bounces.back().release_time;
    if (in_contact) {
      c.y = config.radius;
    } else if (resting) {
      c.y = config.radius;
      vel.x = flipped ? -draw.vx : draw.vx;
    } else {
      const double dt = t - seg_start;
      c.y = std::max(config.radius, y0 + vy0 * dt - 0.5 * config.g * dt * dt);
      vel = {flipped ? -draw.vx : draw.vx, vy0 - config.g * dt};
    }
    traj.times.push_back(t);
    traj.centers.push_back({c});
    traj.velocities.push_back({vel});
  }
  traj.events = sorted_unique(std::move(events));
  return traj;
}

WorldTrajectory simulate_projectile(const ProjectileConfig& config, Rng& rng) {
  return simulate_projectile_from(config, sample_projectile(config, rng));
}

}  // namespace o2v::sim
