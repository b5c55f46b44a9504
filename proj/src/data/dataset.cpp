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

#include "o2v/data/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <utility>

#include "o2v/common.hpp"
#include "o2v/io.hpp"

namespace o2v::data {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::array<char, 4> kMagic{'O', '2', 'V', 'D'};
constexpr int kSuper = 4;  // supersampling factor per axis
constexpr const char* kSplits[] = {"train", "val", "test"};

using io::get_u32;
using io::put_u32;
using io::read_file;
using io::write_file;

json parse_json_file(const fs::path& p) {
  try {
    return json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, p.string() + ": " + e.what());
  }
}

json vec2_json(sim::Vec2 v) { return json::array({v.x, v.y}); }

json interval_json(sim::Interval i) { return json::array({i.lo, i.hi}); }

sim::Interval interval_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

Frame rasterize(std::span<const sim::Vec2> centers, std::span<const double> radii,
                double box_side, int resolution) {
  if (centers.size() != radii.size())
    throw DimensionError("rasterize: centers and radii differ in length");
  Frame f(resolution);
  if (centers.empty()) return f;
  const double pitch = box_side / resolution;
  const double sub = pitch / kSuper;
  for (std::size_t o = 0; o < centers.size(); ++o) {
    const double r = radii[o];
    const sim::Vec2 c = centers[o];
    // Pixel window touched by the disk.
    const int col0 = std::max(0, static_cast<int>(std::floor((c.x - r) / pitch)));
    const int col1 = std::min(resolution - 1, static_cast<int>(std::floor((c.x + r) / pitch)));
    const int row0 = std::max(0, static_cast<int>(std::floor((box_side - c.y - r) / pitch)));
    const int row1 =
        std::min(resolution - 1, static_cast<int>(std::floor((box_side - c.y + r) / pitch)));
    for (int row = row0; row <= row1; ++row)
      for (int col = col0; col <= col1; ++col) {
        int hits = 0;
        for (int si = 0; si < kSuper; ++si) {
          // y of subsample row si; rows grow downward from the top edge.
          const double y = box_side - row * pitch - (si + 0.5) * sub;
          for (int sj = 0; sj < kSuper; ++sj) {
            const double x = col * pitch + (sj + 0.5) * sub;
            const double dx = x - c.x, dy = y - c.y;
            if (dx * dx + dy * dy <= r * r) ++hits;
          }
        }
        const double cov = static_cast<double>(hits) / (kSuper * kSuper);
        // Overlapping disks saturate.
        f.at(row, col) = std::min(1.0, f.at(row, col) + cov);
      }
  }
  return f;
}

Frame rasterize(std::span<const sim::Vec2> centers, double radius, double box_side,
                int resolution) {
  std::vector<double> radii(centers.size(), radius);
  return rasterize(centers, radii, box_side, resolution);
}

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kBouncing: return "bouncing";
    case Kind::kPendulum: return "pendulum";
    case Kind::kProjectile: return "projectile";
  }
  return "unknown";
}

Kind kind_from_string(const std::string& s) {
  if (s == "bouncing") return Kind::kBouncing;
  if (s == "pendulum") return Kind::kPendulum;
  if (s == "projectile") return Kind::kProjectile;
  throw ConfigError("unknown dataset kind '" + s + "'");
}

int GenerationConfig::seq_len() const {
  switch (kind) {
    case Kind::kBouncing: return balls.seq_len;
    case Kind::kPendulum: return pendulum.seq_len;
    case Kind::kProjectile: return projectile.seq_len;
  }
  return 0;
}

double GenerationConfig::frame_dt() const {
  switch (kind) {
    case Kind::kBouncing: return balls.frame_dt;
    case Kind::kPendulum: return pendulum.frame_dt;
    case Kind::kProjectile: return projectile.frame_dt;
  }
  return 0.0;
}

double GenerationConfig::box_side() const {
  switch (kind) {
    case Kind::kBouncing: return balls.box_side;
    case Kind::kPendulum: return pendulum.box_side;
    case Kind::kProjectile: return projectile.box_side;
  }
  return 0.0;
}

std::string GenerationConfig::name() const {
  if (kind == Kind::kBouncing) return "bouncing" + std::to_string(balls.n_balls);
  return to_string(kind);
}

json to_json(const GenerationConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["resolution"] = c.resolution;
  switch (c.kind) {
    case Kind::kBouncing:
      j["params"] = {{"box_side", c.balls.box_side},     {"n_balls", c.balls.n_balls},
                     {"radius", c.balls.radius},         {"mass", c.balls.mass},
                     {"frame_dt", c.balls.frame_dt},     {"sim_dt", c.balls.sim_dt},
                     {"seq_len", c.balls.seq_len},
                     {"target_energy", c.balls.target_energy()}};
      break;
    case Kind::kPendulum:
      j["params"] = {{"box_side", c.pendulum.box_side},
                     {"bob_radius", c.pendulum.bob_radius},
                     {"rod_length_range", interval_json(c.pendulum.rod_length_range)},
                     {"init_angle_range", interval_json(c.pendulum.init_angle_range)},
                     {"g", c.pendulum.g},
                     {"frame_dt", c.pendulum.frame_dt},
                     {"seq_len", c.pendulum.seq_len}};
      break;
    case Kind::kProjectile:
      j["params"] = {{"box_side", c.projectile.box_side},
                     {"radius", c.projectile.radius},
                     {"vx_range", interval_json(c.projectile.vx_range)},
                     {"vy_range", interval_json(c.projectile.vy_range)},
                     {"hy_range", interval_json(c.projectile.hy_range)},
                     {"restitution", c.projectile.restitution},
                     {"contact_duration", c.projectile.contact_duration},
                     {"frame_dt", c.projectile.frame_dt},
                     {"g", c.projectile.g},
                     {"seq_len", c.projectile.seq_len}};
      break;
  }
  return j;
}

GenerationConfig generation_config_from_json(const json& j) {
  GenerationConfig c;
  c.kind = kind_from_string(j.at("kind").get<std::string>());
  c.resolution = j.at("resolution").get<int>();
  const json& p = j.at("params");
  switch (c.kind) {
    case Kind::kBouncing:
      c.balls.box_side = p.at("box_side");
      c.balls.n_balls = p.at("n_balls");
      c.balls.radius = p.at("radius");
      c.balls.mass = p.at("mass");
      c.balls.frame_dt = p.at("frame_dt");
      c.balls.sim_dt = p.at("sim_dt");
      c.balls.seq_len = p.at("seq_len");
      break;
    case Kind::kPendulum:
      c.pendulum.box_side = p.at("box_side");
      c.pendulum.bob_radius = p.at("bob_radius");
      c.pendulum.rod_length_range = interval_from(p.at("rod_length_range"));
      c.pendulum.init_angle_range = interval_from(p.at("init_angle_range"));
      c.pendulum.g = p.at("g");
      c.pendulum.frame_dt = p.at("frame_dt");
      c.pendulum.seq_len = p.at("seq_len");
      break;
    case Kind::kProjectile:
      c.projectile.box_side = p.at("box_side");
      c.projectile.radius = p.at("radius");
      c.projectile.vx_range = interval_from(p.at("vx_range"));
      c.projectile.vy_range = interval_from(p.at("vy_range"));
      c.projectile.hy_range = interval_from(p.at("hy_range"));
      c.projectile.restitution = p.at("restitution");
      c.projectile.contact_duration = p.at("contact_duration");
      c.projectile.frame_dt = p.at("frame_dt");
      c.projectile.g = p.at("g");
      c.projectile.seq_len = p.at("seq_len");
      break;
  }
  return c;
}

const std::vector<Sequence>& DatasetBundle::split(const std::string& name) const {
  if (name == "train") return train;
  if (name == "val") return val;
  if (name == "test") return test;
  throw ConfigError("unknown split '" + name + "'");
}

std::vector<Sequence>& DatasetBundle::split(const std::string& name) {
  return const_cast<std::vector<Sequence>&>(std::as_const(*this).split(name));
}

Sequence generate_sequence(const GenerationConfig& config, std::uint64_t seed) {
  sim::Rng rng(seed);
  Sequence seq;
  sim::WorldTrajectory traj;
  json meta;
  meta["seed"] = seed;
  switch (config.kind) {
    case Kind::kBouncing: {
      const sim::BallState s0 = sim::sample_ball_initial_state(config.balls, rng);
      traj = sim::simulate_bouncing_balls_from(config.balls, s0);
      json centers = json::array(), vels = json::array();
      for (std::size_t i = 0; i < s0.centers.size(); ++i) {
        centers.push_back(vec2_json(s0.centers[i]));
        vels.push_back(vec2_json(s0.velocities[i]));
      }
      meta["centers"] = centers;
      meta["velocities"] = vels;
      break;
    }
    case Kind::kPendulum: {
      const sim::PendulumDraw d = sim::sample_pendulum(config.pendulum, rng);
      traj = sim::simulate_pendulum_from(config.pendulum, d);
      meta["rod_length"] = d.rod_length;
      meta["init_angle"] = d.init_angle;
      break;
    }
    case Kind::kProjectile: {
      const sim::ProjectileDraw d = sim::sample_projectile(config.projectile, rng);
      traj = sim::simulate_projectile_from(config.projectile, d);
      meta["vx"] = d.vx;
      meta["vy"] = d.vy;
      meta["hy"] = d.hy;
      break;
    }
  }
  for (const auto& centers : traj.centers)
    seq.frames.push_back(rasterize(centers, traj.radius, config.box_side(), config.resolution));
  seq.events = traj.events;
  seq.meta = std::move(meta);
  return seq;
}

DatasetBundle build_dataset(const GenerationConfig& config, const SplitCounts& counts,
                            std::uint64_t base_seed) {
  if (counts.train <= 0 || counts.val <= 0 || counts.test <= 0)
    throw ConfigError("split counts must be positive");
  DatasetBundle b;
  b.config = config;
  b.counts = counts;
  b.base_seed = base_seed;
  std::uint64_t index = 0;
  auto fill = [&](std::vector<Sequence>& out, int n) {
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i, ++index) {
      try {
        Sequence s = generate_sequence(config, base_seed + index);
        s.meta["index"] = index;
        out.push_back(std::move(s));
      } catch (const PlacementError& e) {
        throw PlacementError("sequence " + std::to_string(index) + ": " + e.what());
      }
    }
  };
  fill(b.train, counts.train);
  fill(b.val, counts.val);
  fill(b.test, counts.test);
  return b;
}

std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void write_dataset(const DatasetBundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw FormatError(FormatError::Kind::kIo, "cannot create " + dir.string());
  const int t = bundle.seq_len(), res = bundle.resolution();

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["generator"] = to_json(bundle.config);
  manifest["kind"] = to_string(bundle.config.kind);
  manifest["name"] = bundle.config.name();
  manifest["splits"] = {{"train", bundle.train.size()},
                        {"val", bundle.val.size()},
                        {"test", bundle.test.size()}};
  manifest["T"] = t;
  manifest["resolution"] = res;
  manifest["seed"] = bundle.base_seed;
  manifest["frame_dt"] = bundle.config.frame_dt();
  manifest["rendering"] = "coverage-4x4";
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  for (const char* name : kSplits) {
    const auto& seqs = bundle.split(name);
    fs::create_directories(dir / name, ec);
    if (ec) throw FormatError(FormatError::Kind::kIo, "cannot create " + (dir / name).string());
    std::string bytes(kMagic.begin(), kMagic.end());
    bytes.push_back(static_cast<char>(kFormatVersion));
    put_u32(bytes, static_cast<std::uint32_t>(seqs.size()));
    put_u32(bytes, static_cast<std::uint32_t>(t));
    put_u32(bytes, static_cast<std::uint32_t>(res));
    put_u32(bytes, static_cast<std::uint32_t>(res));
    bytes.reserve(bytes.size() + seqs.size() * t * res * res);
    json events = json::array(), meta = json::array();
    for (const Sequence& s : seqs) {
      if (s.length() != t) throw DimensionError("sequence length differs from T");
      for (const Frame& f : s.frames) {
        if (f.resolution != res) throw DimensionError("frame resolution differs");
        for (double v : f.pixels) bytes.push_back(static_cast<char>(quantize(v)));
      }
      events.push_back(s.events);
      meta.push_back(s.meta);
    }
    write_file(dir / name / "frames.bin", bytes);
    write_file(dir / name / "events.json", events.dump() + "\n");
    write_file(dir / name / "meta.json", meta.dump() + "\n");
  }
}

DatasetBundle read_dataset(const fs::path& dir) {
  const json manifest = parse_json_file(dir / "manifest.json");
  DatasetBundle b;
  int t = 0, res = 0;
  try {
    if (manifest.at("format_version").get<int>() != kFormatVersion)
      throw FormatError(FormatError::Kind::kVersionMismatch,
                        "dataset format version " + manifest.at("format_version").dump() +
                            " is not supported (expected " + std::to_string(kFormatVersion) +
                            ")");
    b.config = generation_config_from_json(manifest.at("generator"));
    b.base_seed = manifest.at("seed").get<std::uint64_t>();
    t = manifest.at("T").get<int>();
    res = manifest.at("resolution").get<int>();
    b.counts.train = manifest.at("splits").at("train");
    b.counts.val = manifest.at("splits").at("val");
    b.counts.test = manifest.at("splits").at("test");
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, "manifest.json: " + std::string(e.what()));
  }
  if (t != b.config.seq_len() || res != b.config.resolution)
    throw FormatError(FormatError::Kind::kShapeMismatch,
                      "manifest T/resolution disagree with generator parameters");

  for (const char* name : kSplits) {
    const int expected = name == std::string("train") ? b.counts.train
                         : name == std::string("val") ? b.counts.val
                                                      : b.counts.test;
    const fs::path fpath = dir / name / "frames.bin";
    const std::string bytes = read_file(fpath);
    constexpr std::size_t kHeader = 5 + 16;
    if (bytes.size() < 5 || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
      throw FormatError(FormatError::Kind::kUnrecognized,
                        fpath.string() + ": unrecognized format (bad magic)");
    if (static_cast<unsigned char>(bytes[4]) != kFormatVersion)
      throw FormatError(FormatError::Kind::kVersionMismatch,
                        fpath.string() + ": unsupported frames version " +
                            std::to_string(static_cast<unsigned char>(bytes[4])));
    if (bytes.size() < kHeader)
      throw FormatError(FormatError::Kind::kTruncated, fpath.string() + ": truncated header");
    const std::uint32_t n = get_u32(bytes, 5), ft = get_u32(bytes, 9), fh = get_u32(bytes, 13),
                        fw = get_u32(bytes, 17);
    if (static_cast<int>(n) != expected || static_cast<int>(ft) != t ||
        static_cast<int>(fh) != res || static_cast<int>(fw) != res)
      throw FormatError(FormatError::Kind::kShapeMismatch,
                        fpath.string() + ": tensor shape [" + std::to_string(n) + "][" +
                            std::to_string(ft) + "][" + std::to_string(fh) + "][" +
                            std::to_string(fw) + "] disagrees with manifest [" +
                            std::to_string(expected) + "][" + std::to_string(t) + "][" +
                            std::to_string(res) + "][" + std::to_string(res) + "]");
    const std::size_t frame_px = static_cast<std::size_t>(res) * res;
    const std::size_t payload = static_cast<std::size_t>(n) * t * frame_px;
    if (bytes.size() < kHeader + payload)
      throw FormatError(FormatError::Kind::kTruncated,
                        fpath.string() + ": truncated (" + std::to_string(bytes.size()) +
                            " bytes, expected " + std::to_string(kHeader + payload) + ")");
    if (bytes.size() > kHeader + payload)
      throw FormatError(FormatError::Kind::kShapeMismatch,
                        fpath.string() + ": trailing bytes beyond the declared tensor");

    const json events = parse_json_file(dir / name / "events.json");
    const json meta = parse_json_file(dir / name / "meta.json");
    if (!events.is_array() || events.size() != n || !meta.is_array() || meta.size() != n)
      throw FormatError(FormatError::Kind::kShapeMismatch,
                        std::string(name) + ": events/meta count disagrees with frames");
    auto& out = b.split(name);
    out.resize(n);
    std::size_t off = kHeader;
    for (std::uint32_t s = 0; s < n; ++s) {
      Sequence& seq = out[s];
      seq.frames.assign(static_cast<std::size_t>(t), Frame(res));
      for (int f = 0; f < t; ++f)
        for (std::size_t p = 0; p < frame_px; ++p)
          seq.frames[f].pixels[p] = static_cast<unsigned char>(bytes[off++]) / 255.0;
      try {
        seq.events = events[s].get<std::vector<int>>();
      } catch (const json::exception& e) {
        throw FormatError(FormatError::Kind::kCorrupt, "events.json: " + std::string(e.what()));
      }
      for (int e : seq.events)
        if (e < 0 || e >= t)
          throw FormatError(FormatError::Kind::kShapeMismatch,
                            "events.json: event index " + std::to_string(e) + " outside [0, T)");
      seq.meta = meta[s];
    }
  }
  return b;
}

}  // namespace o2v::data
