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
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "o2v/data/dataset.hpp"
#include "o2v/model/vae_model.hpp"
#include "o2v/objective/objective.hpp"

namespace o2v::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  int amortized_len = 3;
  double gamma = 1.0;
  int latent_dim = 3;
  int ode_hidden = 50;
  int steps_per_frame = 10;
  std::uint64_t seed = 0;
  int checkpoint_every = 1;
  double clip_norm = 100.0;
  // Validation sequences scored per epoch (0 = whole split).
  int val_limit = 0;
  // Training prefix grows from amortized_len to the full length over this many
  // epochs (0 = full length from the start).
  int curriculum_epochs = 0;
  // Latent density weight ramps linearly from kl_warmup_start to 1 over this
  // many epochs (0 = no ramp). Validation always uses weight 1.
  int kl_warmup_epochs = 0;
  double kl_warmup_start = 0.05;

  void validate(int seq_len) const;
  model::NetworkConfig network(int resolution) const;
  objective::ElboOptions elbo_options(const model::NetworkConfig& net) const;
  // Schedules at 1-based `epoch`.
  int train_length(int epoch, int seq_len) const;
  double kl_weight(int epoch) const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

class Adam {
 public:
  Adam(const model::ParameterSet& params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);

  // Descends along the stored gradients, then rounds parameters to float32.
  void step(model::ParameterSet& params);
  int steps() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Euclidean norm of all gradients; scales them down to max_norm if larger.
double clip_gradients(model::ParameterSet& params, double max_norm);

struct StepResult {
  double mean_penalized = 0.0;
  double mean_elbo = 0.0;
  double grad_norm = 0.0;
};

// One mini-batch update on the batch-mean penalized ELBO.
StepResult train_step(model::VariationalModel& model, Adam& adam,
                      std::span<const data::Sequence* const> batch, model::Rng& rng,
                      const objective::ElboOptions& opts, double clip_norm);

// Batch-mean penalized ELBO with a fixed noise stream.
double batch_objective(const model::VariationalModel& model,
                       std::span<const data::Sequence* const> batch, std::uint64_t seed,
                       const objective::ElboOptions& opts);

struct EpochRecord {
  int epoch = 0;
  double train_penalized = 0.0;
  double train_elbo = 0.0;
  objective::ElboBreakdown validation;
  double wall_seconds = 0.0;
  nlohmann::json param_norms;
  int train_length = 0;
  double kl_weight = 1.0;
  bool best = false;
};

nlohmann::json to_json(const EpochRecord& r);

struct TrainLog {
  std::vector<EpochRecord> epochs;

  std::string to_jsonl() const;
  void write(const std::filesystem::path& path) const;
  static TrainLog read(const std::filesystem::path& path);
};

struct TrainOutputs {
  // Last model; the model with the best mean validation penalized ELBO goes to
  // `checkpoint` + ".best".
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::filesystem::path> log;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  model::VariationalModel model;
  model::VariationalModel best;
  TrainLog log;
};

std::filesystem::path best_checkpoint_path(const std::filesystem::path& checkpoint);

// Maximizes the penalized ELBO with Adam. A non-finite objective or a
// diverged rollout aborts with DivergenceError; checkpoints from completed
// epochs stay on disk.
TrainResult train(const data::DatasetBundle& dataset, const TrainConfig& config,
                  const TrainOutputs& outputs = {});

// Sets the decoder output bias to logit(mean pixel intensity of `train`).
void initialize_output_bias(model::VariationalModel& model,
                            const std::vector<data::Sequence>& train);

nlohmann::json parameter_norms(const model::ParameterSet& params);

}  // namespace o2v::train
