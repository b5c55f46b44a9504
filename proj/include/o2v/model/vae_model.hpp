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
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "o2v/ad/ops.hpp"
#include "o2v/data/dataset.hpp"
#include "o2v/model/latent_ode.hpp"

namespace o2v::model {

using Rng = std::mt19937_64;

// Encoder: `channels.size()` stride-2 convolutions (kernel 4, padding 1,
// ReLU) followed by a linear map to 2a outputs (mean, log_std). The decoder
// mirrors it: linear a -> C_last x b x b, ReLU, transposed convolutions
// back to one channel of logits.
struct NetworkConfig {
  int resolution = 32;
  std::vector<int> channels{16, 32, 64};
  int kernel = 4;
  int latent_dim = 3;
  int amortized_len = 3;
  int ode_hidden = 50;

  void validate() const;
  int bottleneck_side() const;  // resolution / 2^blocks
  int bottleneck_size() const;  // C_last * side^2
  FieldArchitecture field() const { return {latent_dim, ode_hidden}; }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

// Named flat parameter arrays with gradient buffers, in a fixed order.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grads;
  };

  Entry& add(const std::string& name, std::vector<int> shape);
  Entry& at(const std::string& name);
  const Entry& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::size_t total_size() const;
  // Sum of sizes of entries whose name starts with `prefix`.
  std::size_t group_size(const std::string& prefix) const;
  void zero_grad();
  // Rounds every value to the nearest float32; checkpoints store float32.
  void round_to_float();

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

struct DiagonalGaussian {
  std::vector<double> mean;
  std::vector<double> log_std;

  std::size_t dim() const { return mean.size(); }
  void validate() const;
};

// log N(x; mean, diag(exp(log_std))^2).
double gaussian_log_density(const DiagonalGaussian& g, std::span<const double> x);

struct GaussianSample {
  std::vector<double> value;
  double log_density = 0.0;
};

// Reparameterized draw mean + exp(log_std) * eps with eps ~ N(0, I).
GaussianSample sample_gaussian(const DiagonalGaussian& g, Rng& rng);
std::vector<double> standard_normal(std::size_t n, Rng& rng);

class VariationalModel {
 public:
  // Deterministic initialization from `seed`. q(W) starts at mean ~ N(0, 0.1^2),
  // log_std = -3.
  VariationalModel(NetworkConfig config, std::uint64_t seed);
  // Empty parameter values (used by checkpoint loading).
  explicit VariationalModel(NetworkConfig config);

  const NetworkConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  std::size_t weight_count() const { return config_.field().weight_count(); }
  DiagonalGaussian weight_posterior() const;

 private:
  void declare();
  NetworkConfig config_;
  ParameterSet params_;
};

// Closed-form parameter counts, computed independently of declare().
struct ParameterCounts {
  std::size_t position_encoder = 0;
  std::size_t velocity_encoder = 0;
  std::size_t decoder = 0;
  std::size_t weight_posterior = 0;  // 2 * |W|
};
ParameterCounts expected_parameter_counts(const NetworkConfig& c);

// --- Differentiable route ------------------------------------------------

// Model parameters placed on a tape, either as leaves that feed gradients
// back into the ParameterSet or as constants.
class BoundModel {
 public:
  BoundModel(VariationalModel& model, ad::Tape& tape, bool with_grad);
  BoundModel(const VariationalModel& model, ad::Tape& tape);

  const NetworkConfig& config() const { return *config_; }
  ad::Tape& tape() const { return *tape_; }
  ad::Var operator[](const std::string& name) const;

 private:
  const NetworkConfig* config_;
  ad::Tape* tape_;
  std::map<std::string, ad::Var> vars_;
};

struct GaussianVars {
  ad::Var mean;
  ad::Var log_std;
};

ad::Var frames_tensor(ad::Tape& tape, std::span<const data::Frame> frames);
GaussianVars encode_position(const BoundModel& m, const data::Frame& x0);
GaussianVars encode_velocity(const BoundModel& m, std::span<const data::Frame> frames);
// Logits of the Bernoulli observation model, shape 1 x R x R.
ad::Var decode_logits(const BoundModel& m, ad::Var s);
// W = mu_f + exp(log sigma_f) * eps.
ad::Var sample_weights(const BoundModel& m, std::span<const double> eps);

// --- Value route ---------------------------------------------------------

DiagonalGaussian encode_position(const VariationalModel& m, const data::Frame& x0);
DiagonalGaussian encode_velocity(const VariationalModel& m, std::span<const data::Frame> frames);
// Block concatenation [position; velocity] of the two encoder posteriors.
DiagonalGaussian initial_posterior(const VariationalModel& m,
                                   std::span<const data::Frame> sequence);
// Bernoulli parameters in (0, 1).
data::Frame decode(const VariationalModel& m, std::span<const double> s);

// sum x log p + (1 - x) log(1 - p).
double bernoulli_log_likelihood(const data::Frame& x, const data::Frame& p);

// --- Checkpoint ----------------------------------------------------------

// Layout (little-endian): "O2VC", u32 version, u32 manifest length, manifest
// JSON, u32 array count, then per array: u32 name length, name, u32 rank,
// u32 dims..., u64 count, f32 values...; finally a CRC-32 of all prior bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const VariationalModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
std::string serialize_checkpoint(const VariationalModel& model,
                                 const nlohmann::json& extra = nlohmann::json::object());
VariationalModel load_checkpoint(const std::filesystem::path& path);
// Throws FormatError(kArchitectureMismatch) if the stored config differs.
VariationalModel load_checkpoint(const std::filesystem::path& path,
                                 const NetworkConfig& expected);
VariationalModel parse_checkpoint(const std::string& bytes);
nlohmann::json checkpoint_manifest(const std::filesystem::path& path);

}  // namespace o2v::model
