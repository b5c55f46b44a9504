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


#include "o2v/objective/objective.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "o2v/common.hpp"

namespace o2v::objective {
namespace {

using ad::Tensor;
using ad::Var;

Tensor frame_tensor(const data::Frame& f) { return Tensor({1, f.resolution, f.resolution}, f.pixels); }

ElboBreakdown read_terms(const ElboTerms& t, const PenaltyConfig& p) {
  ElboBreakdown b;
  b.ode_regularization = t.ode_regularization.item();
  b.vae_loss = t.vae_loss.item();
  b.dynamic_loss = t.dynamic_loss.item();
  b.total = b.ode_regularization + b.vae_loss + b.dynamic_loss;
  b.consistency = t.consistency.valid() ? t.consistency.item() : 0.0;
  b.penalized_total =
      p.beta_w * b.ode_regularization + b.vae_loss + b.dynamic_loss - p.gamma * b.consistency;
  b.log_likelihood = t.log_likelihood.item();
  b.reused_windows = t.reused_windows;
  b.truncated = t.reused_windows > 0;
  return b;
}

}  // namespace

double kl_diag_gaussian(const DiagonalGaussian& q, const DiagonalGaussian& p) {
  q.validate();
  p.validate();
  if (q.dim() != p.dim())
    throw DimensionError("kl_diag_gaussian: dimensions " + std::to_string(q.dim()) + " and " +
                         std::to_string(p.dim()));
  double kl = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) {
    const double vq = std::exp(2.0 * q.log_std[i]), vp = std::exp(2.0 * p.log_std[i]);
    const double dm = q.mean[i] - p.mean[i];
    kl += p.log_std[i] - q.log_std[i] + (vq + dm * dm) / (2.0 * vp) - 0.5;
  }
  return kl;
}

PenaltyConfig PenaltyConfig::for_network(const model::NetworkConfig& c, double gamma) {
  PenaltyConfig p;
  p.beta_w = static_cast<double>(c.latent_dim) / static_cast<double>(c.field().weight_count());
  p.gamma = gamma;
  p.validate();
  return p;
}

void PenaltyConfig::validate() const {
  if (!(beta_w > 0.0) || !std::isfinite(beta_w)) throw ConfigError("beta_W must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
}

void ElboOptions::validate() const {
  if (mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
  if (!(kl_weight > 0.0 && kl_weight <= 1.0)) throw ConfigError("kl_weight must lie in (0, 1]");
  if (steps_per_frame < 1) throw ConfigError("steps_per_frame must be >= 1");
  penalty.validate();
}

nlohmann::json to_json(const ElboBreakdown& b) {
  return {{"ode_regularization", b.ode_regularization},
          {"vae_loss", b.vae_loss},
          {"dynamic_loss", b.dynamic_loss},
          {"total", b.total},
          {"penalized_total", b.penalized_total},
          {"consistency", b.consistency},
          {"log_likelihood", b.log_likelihood},
          {"reused_windows", b.reused_windows},
          {"truncated", b.truncated}};
}

ElboTerms elbo_terms(const model::BoundModel& m, const data::Sequence& seq, Rng& rng,
                     int steps_per_frame, bool with_consistency) {
  const auto& cfg = m.config();
  const int a = cfg.latent_dim, len = cfg.amortized_len;
  const int T = seq.length();
  if (T < len)
    throw DimensionError("sequence has " + std::to_string(T) + " frames, the velocity encoder needs " +
                         std::to_string(len));
  ad::Tape& tape = m.tape();
  const std::span<const data::Frame> frames(seq.frames);

  const auto eps_w = model::standard_normal(cfg.field().weight_count(), rng);
  const auto eps_z = model::standard_normal(static_cast<std::size_t>(2 * a), rng);

  ElboTerms out;
  out.ode_regularization = -ad::kl_std_normal(m["ode.mean"], m["ode.log_std"]);
  const Var w = model::sample_weights(m, eps_w);
  const model::FieldVars field = model::bind_field(cfg.field(), w);

  const auto pos = model::encode_position(m, frames[0]);
  const auto vel = model::encode_velocity(m, frames.first(static_cast<std::size_t>(len)));
  const Var mean0 = ad::concat({pos.mean, vel.mean});
  const Var lstd0 = ad::concat({pos.log_std, vel.log_std});
  const Var z0 = mean0 + ad::exp(lstd0) * tape.constant(Tensor::vector(eps_z));
  const Var log_q0 = ad::normal_logpdf(z0, mean0, lstd0);
  const Var s0 = ad::slice(z0, 0, {a});
  const Var v0 = ad::slice(z0, static_cast<std::size_t>(a), {a});

  const auto times = model::frame_index_times(T);
  const auto traj = model::integrate(field, s0, v0, log_q0, times, steps_per_frame);

  std::vector<Var> loglik(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i)
    loglik[i] = ad::bernoulli_loglik_logits(frame_tensor(frames[i]), model::decode_logits(m, traj.s[i]));

  out.vae_loss = -(log_q0 - ad::std_normal_logpdf(z0)) + loglik[0];
  std::vector<std::pair<double, Var>> dyn, ll;
  for (int i = 0; i < T; ++i) ll.emplace_back(1.0, loglik[i]);
  for (int i = 1; i < T; ++i) {
    const Var zi = ad::concat({traj.s[i], traj.v[i]});
    dyn.emplace_back(-1.0, traj.log_q[i]);
    dyn.emplace_back(1.0, ad::std_normal_logpdf(zi));
    dyn.emplace_back(1.0, loglik[i]);
  }
  out.dynamic_loss = dyn.empty() ? tape.constant(Tensor::scalar(0.0)) : ad::lincomb(dyn);
  out.log_likelihood = ad::lincomb(ll);

  if (with_consistency) {
    std::map<int, model::GaussianVars> vel_cache;
    std::vector<std::pair<double, Var>> cons;
    const int last_start = T - len;
    for (int i = 1; i < T; ++i) {
      const int start = std::min(i, last_start);
      if (i > last_start) ++out.reused_windows;
      auto it = vel_cache.find(start);
      if (it == vel_cache.end())
        it = vel_cache
                 .emplace(start, model::encode_velocity(
                                     m, frames.subspan(static_cast<std::size_t>(start),
                                                       static_cast<std::size_t>(len))))
                 .first;
      const auto pi = model::encode_position(m, frames[i]);
      const Var zi = ad::concat({traj.s[i], traj.v[i]});
      const Var lq_enc = ad::normal_logpdf(zi, ad::concat({pi.mean, it->second.mean}),
                                           ad::concat({pi.log_std, it->second.log_std}));
      cons.emplace_back(1.0, traj.log_q[i]);
      cons.emplace_back(-1.0, lq_enc);
    }
    out.consistency = cons.empty() ? tape.constant(Tensor::scalar(0.0)) : ad::lincomb(cons);
  }
  return out;
}

Var penalized(const ElboTerms& t, const PenaltyConfig& p) {
  std::vector<std::pair<double, Var>> terms{
      {p.beta_w, t.ode_regularization}, {1.0, t.vae_loss}, {1.0, t.dynamic_loss}};
  if (t.consistency.valid()) terms.emplace_back(-p.gamma, t.consistency);
  return ad::lincomb(terms);
}

Var annealed(const ElboTerms& t, const PenaltyConfig& p, double kappa) {
  if (kappa == 1.0) return penalized(t, p);
  std::vector<std::pair<double, Var>> terms{{p.beta_w, t.ode_regularization},
                                            {1.0 - kappa, t.log_likelihood},
                                            {kappa, t.vae_loss},
                                            {kappa, t.dynamic_loss}};
  if (t.consistency.valid()) terms.emplace_back(-kappa * p.gamma, t.consistency);
  return ad::lincomb(terms);
}

ElboBreakdown elbo(const model::VariationalModel& model, const data::Sequence& seq, Rng& rng,
                   const ElboOptions& opts) {
  opts.validate();
  ElboBreakdown acc;
  for (int k = 0; k < opts.mc_samples; ++k) {
    ad::Tape tape;
    const model::BoundModel bm(model, tape);
    const auto b = read_terms(elbo_terms(bm, seq, rng, opts.steps_per_frame, opts.penalty.gamma != 0.0),
                              opts.penalty);
    acc.ode_regularization += b.ode_regularization;
    acc.vae_loss += b.vae_loss;
    acc.dynamic_loss += b.dynamic_loss;
    acc.consistency += b.consistency;
    acc.penalized_total += b.penalized_total;
    acc.log_likelihood += b.log_likelihood;
    acc.reused_windows = b.reused_windows;
    acc.truncated = b.truncated;
  }
  const double n = opts.mc_samples;
  acc.ode_regularization /= n;
  acc.vae_loss /= n;
  acc.dynamic_loss /= n;
  acc.consistency /= n;
  acc.penalized_total /= n;
  acc.log_likelihood /= n;
  acc.total = acc.ode_regularization + acc.vae_loss + acc.dynamic_loss;
  return acc;
}

double penalized_elbo(const model::VariationalModel& model, const data::Sequence& seq, Rng& rng,
                      const ElboOptions& opts) {
  return elbo(model, seq, rng, opts).penalized_total;
}

ElboBreakdown accumulate_gradient(model::VariationalModel& model, const data::Sequence& seq,
                                  Rng& rng, const ElboOptions& opts, double weight) {
  opts.validate();
  ad::Tape tape;
  const model::BoundModel bm(model, tape, true);
  const auto terms = elbo_terms(bm, seq, rng, opts.steps_per_frame, opts.penalty.gamma != 0.0);
  const Var obj = annealed(terms, opts.penalty, opts.kl_weight);
  const auto b = read_terms(terms, opts.penalty);
  if (!std::isfinite(obj.item())) return b;
  tape.backward(ad::scale(obj, -weight));
  return b;
}

}  // namespace o2v::objective
