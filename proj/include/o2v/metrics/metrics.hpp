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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "o2v/data/dataset.hpp"
#include "o2v/model/vae_model.hpp"

namespace o2v::metrics {

using data::Frame;
using model::Rng;

// Mean squared pixel error. Throws DimensionError on a shape mismatch.
double pixel_mse(const Frame& pred, const Frame& truth);
std::vector<double> pixel_mse(std::span<const Frame> pred, std::span<const Frame> truth);

// 10 log10(1 / mse); nullopt stands for +infinity (mse == 0).
std::optional<double> psnr(double mse);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};
MeanStd mean_std(std::span<const double> xs);

// log(mean(exp(x))), stable.
double log_mean_exp(std::span<const double> xs);

// One draw from the approximate posterior, rolled forward in time.
struct PosteriorSample {
  model::LatentTrajectory trajectory;
  std::vector<Frame> probs;  // decoded Bernoulli means per time point
  double log_weight = 0.0;   // log p(X, Z, W) - log q(Z, W | X)
};

// Draws `samples` (W, z0) pairs (eps_W first, then eps_z0, per sample) and
// integrates each across the whole sequence.
std::vector<PosteriorSample> posterior_samples(const model::VariationalModel& model,
                                               const data::Sequence& seq, int samples, Rng& rng,
                                               int steps_per_frame = 10);

// Pixelwise average of the decoded means.
std::vector<Frame> mean_prediction(std::span<const PosteriorSample> samples);

// -log (1/L) sum_l p(X, Z_l, W_l) / q(Z_l, W_l | X). The latent path is a
// deterministic push-forward of z0 under both p and q, so the path density
// ratio reduces to p(z0) / q_enc(z0).
double nll_importance(std::span<const PosteriorSample> samples);
double nll_importance(const model::VariationalModel& model, const data::Sequence& seq,
                      int samples, Rng& rng, int steps_per_frame = 10);

// Per-time statistics of ||v_t|| and ||f_W(s_t, v_t)|| across samples.
struct LatentNorms {
  std::vector<MeanStd> velocity;
  std::vector<MeanStd> acceleration;
};
LatentNorms latent_norms(std::span<const PosteriorSample> samples);

// Union of centered windows of odd width around each event, clipped to
// [0, length). Throws ConfigError on an even or non-positive width.
std::vector<int> expand_event_windows(std::span<const int> events, int window, int length);

struct GroupStats {
  std::size_t count = 0;
  MeanStd stats;
  bool empty() const { return count == 0; }
};

struct NormBreakdown {
  GroupStats event;
  GroupStats non_event;
};

// values[c][t] pooled into event / non-event groups by windows[c].
NormBreakdown norm_breakdown(const std::vector<std::vector<double>>& values,
                             const std::vector<std::vector<int>>& windows);

struct EvalOptions {
  int samples = 10;
  int steps_per_frame = 10;
  int event_window = 3;
  int head_frames = 5;  // frames averaged into the short-horizon MSE
  std::uint64_t seed = 0;
  int limit = 0;  // 0 = every sequence
  void validate() const;
};

struct CaseResult {
  std::size_t index = 0;
  std::vector<double> mse;
  double nll = 0.0;
  std::vector<int> events;
  std::vector<int> event_frames;
  std::vector<double> velocity_norm;      // per time, averaged over samples
  std::vector<double> acceleration_norm;  // per time, averaged over samples
};

struct MetricsReport {
  std::string dataset;
  EvalOptions options;
  int length = 0;
  std::vector<CaseResult> cases;

  std::vector<MeanStd> mse;         // per time, across cases
  std::vector<MeanStd> psnr;        // per time, across cases (finite cases only)
  std::vector<bool> psnr_infinite;  // some case had mse == 0 at t
  MeanStd head_mse;                 // mean of mse over the first head_frames
  MeanStd nll;
  LatentNorms norms;  // pooled over cases and samples
  NormBreakdown acceleration_breakdown;
  NormBreakdown velocity_breakdown;
};

// Per-case RNG streams are seeded with options.seed + case index.
MetricsReport evaluate(const model::VariationalModel& model, std::span<const data::Sequence> test,
                       const EvalOptions& options, const std::string& dataset = "");

CaseResult evaluate_case(const model::VariationalModel& model, const data::Sequence& seq,
                         std::span<const PosteriorSample> samples, int event_window);

nlohmann::json to_json(const MetricsReport& r);

}  // namespace o2v::metrics
