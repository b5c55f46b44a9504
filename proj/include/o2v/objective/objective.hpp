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

#include <nlohmann/json.hpp>

#include "o2v/data/dataset.hpp"
#include "o2v/model/vae_model.hpp"

namespace o2v::objective {

using model::DiagonalGaussian;
using model::Rng;

// Closed-form KL[q || p] between diagonal Gaussians.
double kl_diag_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& p);

struct PenaltyConfig {
  double beta_w = 1.0;
  double gamma = 1.0;

  // beta_w = a / |W|.
  static PenaltyConfig for_network(const model::NetworkConfig& c, double gamma = 1.0);
  void validate() const;
};

struct ElboOptions {
  int mc_samples = 1;
  int steps_per_frame = 10;
  PenaltyConfig penalty;
  // Weight kappa in (0, 1] on every latent density term (entropy, prior,
  // consistency) of the training objective. 1 leaves it unchanged.
  double kl_weight = 1.0;

  void validate() const;
};

struct ElboBreakdown {
  double ode_regularization = 0.0;  // -KL[q(W) || p(W)]
  double vae_loss = 0.0;
  double dynamic_loss = 0.0;
  double total = 0.0;
  double penalized_total = 0.0;
  // sum_{i>=1} [log q_ode(z_i) - log q_enc(z_i | window i)]
  double consistency = 0.0;
  double log_likelihood = 0.0;  // sum_i log p(x_i | s_i)
  // Time points whose velocity window ran past the sequence end and reused
  // the last full window.
  int reused_windows = 0;
  bool truncated = false;
};

nlohmann::json to_json(const ElboBreakdown& b);

// Single-sample terms on a tape. Draws eps_W (|W|) then eps_z0 (2a) from rng.
struct ElboTerms {
  ad::Var ode_regularization;
  ad::Var vae_loss;
  ad::Var dynamic_loss;
  ad::Var consistency;  // invalid unless requested
  ad::Var log_likelihood;
  int reused_windows = 0;
};

ElboTerms elbo_terms(const model::BoundModel& m, const data::Sequence& seq, Rng& rng,
                     int steps_per_frame, bool with_consistency);

// beta_w * ode_regularization + vae_loss + dynamic_loss - gamma * consistency.
ad::Var penalized(const ElboTerms& t, const PenaltyConfig& p);

// beta_w * ode_reg + (1 - kappa) * log_likelihood
//   + kappa * (vae_loss + dynamic_loss - gamma * consistency).
ad::Var annealed(const ElboTerms& t, const PenaltyConfig& p, double kappa);

// Monte Carlo average over opts.mc_samples draws; penalized_total included.
ElboBreakdown elbo(const model::VariationalModel& model, const data::Sequence& seq, Rng& rng,
                   const ElboOptions& opts);
double penalized_elbo(const model::VariationalModel& model, const data::Sequence& seq, Rng& rng,
                      const ElboOptions& opts);

// One sample: adds d(-weight * objective)/d(theta) into model gradients, where the
// objective is annealed(terms, opts.penalty, opts.kl_weight). The returned
// breakdown holds the unweighted terms.
ElboBreakdown accumulate_gradient(model::VariationalModel& model, const data::Sequence& seq,
                                  Rng& rng, const ElboOptions& opts, double weight);

}  // namespace o2v::objective
