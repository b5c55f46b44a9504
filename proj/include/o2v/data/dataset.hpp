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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "o2v/sim/physics.hpp"

namespace o2v::data {

inline constexpr int kDefaultResolution = 32;
inline constexpr int kFormatVersion = 1;

// Square grayscale image, row 0 at the top of the box. Pixels in [0, 1].
struct Frame {
  int resolution = kDefaultResolution;
  std::vector<double> pixels;

  Frame() : pixels(static_cast<std::size_t>(kDefaultResolution) * kDefaultResolution, 0.0) {}
  explicit Frame(int res) : resolution(res), pixels(static_cast<std::size_t>(res) * res, 0.0) {}

  double& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * resolution + col]; }
  double at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * resolution + col];
  }
  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Sequence {
  std::vector<Frame> frames;
  std::vector<int> events;
  nlohmann::json meta;  // generating parameters

  int length() const { return static_cast<int>(frames.size()); }
};

// Filled disks with area coverage estimated by 4x4 supersampling per pixel.
Frame rasterize(std::span<const sim::Vec2> centers, std::span<const double> radii,
                double box_side, int resolution = kDefaultResolution);
Frame rasterize(std::span<const sim::Vec2> centers, double radius, double box_side,
                int resolution = kDefaultResolution);

enum class Kind { kBouncing, kPendulum, kProjectile };

std::string to_string(Kind kind);
Kind kind_from_string(const std::string& s);

struct SplitCounts {
  int train = 10000;
  int val = 500;
  int test = 500;
  int total() const { return train + val + test; }
};

struct GenerationConfig {
  Kind kind = Kind::kBouncing;
  sim::BallWorldConfig balls;
  sim::PendulumConfig pendulum;
  sim::ProjectileConfig projectile;
  int resolution = kDefaultResolution;

  int seq_len() const;
  double frame_dt() const;
  double box_side() const;
  // Short dataset name used in file names, e.g. "bouncing1".
  std::string name() const;
};

nlohmann::json to_json(const GenerationConfig& c);
GenerationConfig generation_config_from_json(const nlohmann::json& j);

struct DatasetBundle {
  GenerationConfig config;
  SplitCounts counts;
  std::uint64_t base_seed = 0;
  std::vector<Sequence> train;
  std::vector<Sequence> val;
  std::vector<Sequence> test;

  int seq_len() const { return config.seq_len(); }
  int resolution() const { return config.resolution; }
  const std::vector<Sequence>& split(const std::string& name) const;
  std::vector<Sequence>& split(const std::string& name);
};

// Simulates and rasterizes one sequence with seed base_seed + index.
Sequence generate_sequence(const GenerationConfig& config, std::uint64_t seed);

// Deterministic: sequence j of the concatenated train/val/test order uses
// seed base_seed + j. Placement failures are rethrown with the index.
DatasetBundle build_dataset(const GenerationConfig& config, const SplitCounts& counts,
                            std::uint64_t base_seed);

// Directory layout:
//   manifest.json
//   {train,val,test}/frames.bin   "O2VD" 0x01, u32 num_seq, T, H, W (LE),
//                                 then u8 pixels [num_seq][T][H][W]
//   {train,val,test}/events.json  [[event indices], ...]
//   {train,val,test}/meta.json    [{generating parameters}, ...]
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);
DatasetBundle read_dataset(const std::filesystem::path& dir);

std::uint8_t quantize(double v);

}  // namespace o2v::data
