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


#include "o2v/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "o2v/common.hpp"
#include "o2v/io.hpp"

namespace o2v::train {
namespace {

using nlohmann::json;

constexpr std::uint64_t kValSeedOffset = 0x5eed0f5a1ULL;

objective::ElboBreakdown mean_breakdown(const std::vector<objective::ElboBreakdown>& v) {
  objective::ElboBreakdown m;
  if (v.empty()) return m;
  for (const auto& b : v) {
    m.ode_regularization += b.ode_regularization;
    m.vae_loss += b.vae_loss;
    m.dynamic_loss += b.dynamic_loss;
    m.penalized_total += b.penalized_total;
    m.consistency += b.consistency;
    m.log_likelihood += b.log_likelihood;
    m.reused_windows = std::max(m.reused_windows, b.reused_windows);
    m.truncated = m.truncated || b.truncated;
  }
  const double n = static_cast<double>(v.size());
  m.ode_regularization /= n;
  m.vae_loss /= n;
  m.dynamic_loss /= n;
  m.penalized_total /= n;
  m.consistency /= n;
  m.log_likelihood /= n;
  m.total = m.ode_regularization + m.vae_loss + m.dynamic_loss;
  return m;
}

}  // namespace

void TrainConfig::validate(int seq_len) const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (amortized_len < 2) throw ConfigError("amortized length must be >= 2");
  if (amortized_len > seq_len)
    throw ConfigError("amortized length " + std::to_string(amortized_len) +
                      " exceeds the sequence length " + std::to_string(seq_len));
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (latent_dim < 1) throw ConfigError("latent dimension must be positive");
  if (ode_hidden < 1) throw ConfigError("field width must be positive");
  if (steps_per_frame < 1) throw ConfigError("steps per frame must be positive");
  if (checkpoint_every < 1) throw ConfigError("checkpoint interval must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("clip norm must be positive");
  if (val_limit < 0) throw ConfigError("val_limit must be >= 0");
  if (curriculum_epochs < 0) throw ConfigError("curriculum epochs must be >= 0");
  if (kl_warmup_epochs < 0) throw ConfigError("KL warm-up epochs must be >= 0");
  if (!(kl_warmup_start > 0.0 && kl_warmup_start <= 1.0))
    throw ConfigError("KL warm-up start must lie in (0, 1]");
}

int TrainConfig::train_length(int epoch, int seq_len) const {
  if (curriculum_epochs == 0) return seq_len;
  const int span = seq_len - amortized_len;
  return std::min(seq_len, amortized_len + (epoch - 1) * span / curriculum_epochs);
}

double TrainConfig::kl_weight(int epoch) const {
  if (kl_warmup_epochs == 0) return 1.0;
  const double f = static_cast<double>(epoch - 1) / kl_warmup_epochs;
  return std::min(1.0, kl_warmup_start + (1.0 - kl_warmup_start) * f);
}

model::NetworkConfig TrainConfig::network(int resolution) const {
  model::NetworkConfig n;
  n.resolution = resolution;
  n.latent_dim = latent_dim;
  n.amortized_len = amortized_len;
  n.ode_hidden = ode_hidden;
  n.validate();
  return n;
}

objective::ElboOptions TrainConfig::elbo_options(const model::NetworkConfig& net) const {
  objective::ElboOptions o;
  o.mc_samples = 1;
  o.steps_per_frame = steps_per_frame;
  o.penalty = objective::PenaltyConfig::for_network(net, gamma);
  return o;
}

json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"amortized_len", c.amortized_len},
          {"gamma", c.gamma},                 {"latent_dim", c.latent_dim},
          {"ode_hidden", c.ode_hidden},       {"steps_per_frame", c.steps_per_frame},
          {"seed", c.seed},                   {"checkpoint_every", c.checkpoint_every},
          {"clip_norm", c.clip_norm},         {"val_limit", c.val_limit},
          {"curriculum_epochs", c.curriculum_epochs},
          {"kl_warmup_epochs", c.kl_warmup_epochs},
          {"kl_warmup_start", c.kl_warmup_start}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  try {
    c.learning_rate = j.at("learning_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.amortized_len = j.at("amortized_len").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.ode_hidden = j.at("ode_hidden").get<int>();
    c.steps_per_frame = j.at("steps_per_frame").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.checkpoint_every = j.at("checkpoint_every").get<int>();
    c.clip_norm = j.at("clip_norm").get<double>();
    c.val_limit = j.at("val_limit").get<int>();
    c.curriculum_epochs = j.value("curriculum_epochs", 0);
    c.kl_warmup_epochs = j.value("kl_warmup_epochs", 0);
    c.kl_warmup_start = j.value("kl_warmup_start", 0.05);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

// --- Adam ----------------------------------------------------------------

Adam::Adam(const model::ParameterSet& params, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.values.size(), 0.0);
    v_.emplace_back(e.values.size(), 0.0);
  }
}

void Adam::step(model::ParameterSet& params) {
  auto& entries = params.entries();
  if (entries.size() != m_.size()) throw DimensionError("Adam: parameter set changed shape");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, t_);
  const double c2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    auto& e = entries[k];
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < e.values.size(); ++i) {
      const double g = e.grads[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mh = m[i] / c1, vh = v[i] / c2;
      e.values[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
  params.round_to_float();
}

double clip_gradients(model::ParameterSet& params, double max_norm) {
  double sq = 0.0;
  for (const auto& e : params.entries())
    for (double g : e.grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& e : params.entries())
      for (double& g : e.grads) g *= s;
  }
  return norm;
}

StepResult train_step(model::VariationalModel& model, Adam& adam,
                      std::span<const data::Sequence* const> batch, model::Rng& rng,
                      const objective::ElboOptions& opts, double clip_norm) {
  if (batch.empty()) throw ConfigError("empty batch");
  model.params().zero_grad();
  StepResult r;
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const data::Sequence* s : batch) {
    const auto b = objective::accumulate_gradient(model, *s, rng, opts, w);
    if (!std::isfinite(b.penalized_total))
      throw DivergenceError("non-finite training objective", 0.0);
    r.mean_penalized += w * b.penalized_total;
    r.mean_elbo += w * b.total;
  }
  r.grad_norm = clip_gradients(model.params(), clip_norm);
  if (!std::isfinite(r.grad_norm)) throw DivergenceError("non-finite gradient", 0.0);
  adam.step(model.params());
  return r;
}

double batch_objective(const model::VariationalModel& model,
                       std::span<const data::Sequence* const> batch, std::uint64_t seed,
                       const objective::ElboOptions& opts) {
  model::Rng rng(seed);
  double acc = 0.0;
  for (const data::Sequence* s : batch) acc += objective::elbo(model, *s, rng, opts).penalized_total;
  return acc / static_cast<double>(batch.size());
}

// --- Log -----------------------------------------------------------------

json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_penalized_elbo", r.train_penalized},
          {"train_elbo", r.train_elbo},
          {"validation", objective::to_json(r.validation)},
          {"wall_seconds", r.wall_seconds},
          {"param_norms", r.param_norms},
          {"train_length", r.train_length},
          {"kl_weight", r.kl_weight},
          {"best", r.best}};
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) out += to_json(e).dump() + "\n";
  return out;
}

void TrainLog::write(const std::filesystem::path& path) const {
  io::write_file_atomic(path, to_jsonl());
}

TrainLog TrainLog::read(const std::filesystem::path& path) {
  TrainLog log;
  std::istringstream in(io::read_file(path));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EpochRecord r;
      r.epoch = j.at("epoch");
      r.train_penalized = j.at("train_penalized_elbo");
      r.train_elbo = j.at("train_elbo");
      const auto& v = j.at("validation");
      r.validation.ode_regularization = v.at("ode_regularization");
      r.validation.vae_loss = v.at("vae_loss");
      r.validation.dynamic_loss = v.at("dynamic_loss");
      r.validation.total = v.at("total");
      r.validation.penalized_total = v.at("penalized_total");
      r.wall_seconds = j.at("wall_seconds");
      r.param_norms = j.at("param_norms");
      r.best = j.at("best");
      r.train_length = j.value("train_length", 0);
      r.kl_weight = j.value("kl_weight", 1.0);
      log.epochs.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw FormatError(FormatError::Kind::kCorrupt, path.string() + ": " + e.what());
    }
  }
  return log;
}

json parameter_norms(const model::ParameterSet& params) {
  json out = json::object();
  for (const char* group : {"pos.", "vel.", "dec.", "ode.mean", "ode.log_std"}) {
    double sq = 0.0;
    for (const auto& e : params.entries())
      if (e.name.rfind(group, 0) == 0)
        for (double v : e.values) sq += v * v;
    std::string key(group);
    if (key.back() == '.') key.pop_back();
    out[key] = std::sqrt(sq);
  }
  return out;
}

void initialize_output_bias(model::VariationalModel& model,
                            const std::vector<data::Sequence>& train) {
  double sum = 0.0, count = 0.0;
  for (const auto& s : train)
    for (const auto& f : s.frames) {
      sum += std::accumulate(f.pixels.begin(), f.pixels.end(), 0.0);
      count += static_cast<double>(f.pixels.size());
    }
  if (count == 0.0) return;
  const double p = std::clamp(sum / count, 1e-4, 1.0 - 1e-4);
  const std::string name =
      "dec.deconv" + std::to_string(model.config().channels.size() - 1) + ".b";
  auto& b = model.params().at(name).values;
  std::fill(b.begin(), b.end(), std::log(p / (1.0 - p)));
  model.params().round_to_float();
}

std::filesystem::path best_checkpoint_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p += ".best";
  return p;
}

// --- Training loop -------------------------------------------------------

TrainResult train(const data::DatasetBundle& dataset, const TrainConfig& config,
                  const TrainOutputs& outputs) {
  config.validate(dataset.seq_len());
  if (dataset.train.empty()) throw ConfigError("training split is empty");
  const auto net = config.network(dataset.resolution());
  const auto opts = config.elbo_options(net);
  const json extra = {{"train_config", to_json(config)}};

  TrainResult result{model::VariationalModel(net, config.seed),
                     model::VariationalModel(net, config.seed), {}};
  auto& model = result.model;
  initialize_output_bias(model, dataset.train);
  result.best = model;
  Adam adam(model.params(), config.learning_rate);
  model::Rng rng(config.seed);

  std::vector<const data::Sequence*> val;
  const std::size_t nval = config.val_limit > 0
                               ? std::min<std::size_t>(dataset.val.size(), config.val_limit)
                               : dataset.val.size();
  for (std::size_t i = 0; i < nval; ++i) val.push_back(&dataset.val[i]);

  std::vector<std::size_t> order(dataset.train.size());
  std::iota(order.begin(), order.end(), 0);
  double best_score = -std::numeric_limits<double>::infinity();

  if (outputs.checkpoint && config.epochs == 0) {
    save_checkpoint(model, *outputs.checkpoint, extra);
    save_checkpoint(model, best_checkpoint_path(*outputs.checkpoint), extra);
  }

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_length = config.train_length(epoch, dataset.seq_len());
    rec.kl_weight = config.kl_weight(epoch);
    auto step_opts = opts;
    step_opts.kl_weight = rec.kl_weight;
    std::vector<data::Sequence> prefixes;
    if (rec.train_length < dataset.seq_len()) {
      prefixes.reserve(dataset.train.size());
      for (const auto& s : dataset.train) {
        data::Sequence p;
        p.frames.assign(s.frames.begin(), s.frames.begin() + rec.train_length);
        for (int e : s.events)
          if (e < rec.train_length) p.events.push_back(e);
        prefixes.push_back(std::move(p));
      }
    }
    const auto& pool = prefixes.empty() ? dataset.train : prefixes;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < order.size(); b += config.batch_size) {
      const std::size_t end = std::min(order.size(), b + config.batch_size);
      std::vector<const data::Sequence*> batch;
      for (std::size_t i = b; i < end; ++i) batch.push_back(&pool[order[i]]);
      StepResult sr;
      try {
        sr = train_step(model, adam, batch, rng, step_opts, config.clip_norm);
      } catch (const DivergenceError& e) {
        std::string where = outputs.checkpoint ? "; last good checkpoint: " +
                                                     outputs.checkpoint->string()
                                               : "";
        throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " +
                                  e.what() + where,
                              e.time());
      }
      rec.train_penalized += sr.mean_penalized * static_cast<double>(batch.size());
      rec.train_elbo += sr.mean_elbo * static_cast<double>(batch.size());
      seen += batch.size();
    }
    rec.train_penalized /= static_cast<double>(seen);
    rec.train_elbo /= static_cast<double>(seen);

    std::vector<objective::ElboBreakdown> vb;
    model::Rng vrng(config.seed + kValSeedOffset);
    for (const auto* s : val) vb.push_back(objective::elbo(model, *s, vrng, opts));
    rec.validation = mean_breakdown(vb);
    const double score = val.empty() ? rec.train_penalized : rec.validation.penalized_total;
    if (score > best_score) {
      best_score = score;
      rec.best = true;
      result.best = model;
    }
    rec.param_norms = parameter_norms(model.params());
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(rec);

    if (outputs.checkpoint) {
      if (rec.best) save_checkpoint(model, best_checkpoint_path(*outputs.checkpoint), extra);
      if (epoch % config.checkpoint_every == 0 || epoch == config.epochs)
        save_checkpoint(model, *outputs.checkpoint, extra);
    }
    if (outputs.log) result.log.write(*outputs.log);
    if (outputs.on_epoch) outputs.on_epoch(rec);
  }
  if (outputs.log && config.epochs == 0) result.log.write(*outputs.log);
  return result;
}

}  // namespace o2v::train
