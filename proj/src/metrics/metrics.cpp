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


#include "o2v/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "o2v/common.hpp"

namespace o2v::metrics {

using nlohmann::json;

double pixel_mse(const Frame& pred, const Frame& truth) {
  if (pred.resolution != truth.resolution || pred.pixels.size() != truth.pixels.size())
    throw DimensionError("pixel_mse: frame shapes differ (" + std::to_string(pred.resolution) +
                         " vs " + std::to_string(truth.resolution) + ")");
  if (pred.pixels.empty()) throw DimensionError("pixel_mse: empty frame");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
    const double d = pred.pixels[i] - truth.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.pixels.size());
}

std::vector<double> pixel_mse(std::span<const Frame> pred, std::span<const Frame> truth) {
  if (pred.size() != truth.size())
    throw DimensionError("pixel_mse: " + std::to_string(pred.size()) + " predicted frames vs " +
                         std::to_string(truth.size()) + " targets");
  std::vector<double> out;
  out.reserve(pred.size());
  for (std::size_t t = 0; t < pred.size(); ++t) out.push_back(pixel_mse(pred[t], truth[t]));
  return out;
}

std::optional<double> psnr(double mse) {
  if (!(mse >= 0.0)) throw DimensionError("psnr: negative or NaN mse");
  if (mse == 0.0) return std::nullopt;
  return 10.0 * std::log10(1.0 / mse);
}

MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*lo == *hi) return {*lo, 0.0};
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

double log_mean_exp(std::span<const double> xs) {
  if (xs.empty()) throw DimensionError("log_mean_exp: empty input");
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc / static_cast<double>(xs.size()));
}

namespace {

double norm(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::vector<PosteriorSample> posterior_samples(const model::VariationalModel& model,
                                               const data::Sequence& seq, int samples, Rng& rng,
                                               int steps_per_frame) {
  if (samples < 1) throw ConfigError("posterior_samples: need at least one sample");
  if (steps_per_frame < 1) throw ConfigError("posterior_samples: steps_per_frame must be >= 1");
  const auto& cfg = model.config();
  const int a = cfg.latent_dim;
  for (const auto& f : seq.frames)
    if (f.resolution != cfg.resolution)
      throw DimensionError("posterior_samples: frame resolution " + std::to_string(f.resolution) +
                           " vs model " + std::to_string(cfg.resolution));

  const auto q0 = model::initial_posterior(model, seq.frames);
  const auto qw = model.weight_posterior();
  const model::DiagonalGaussian pz{std::vector<double>(2 * a, 0.0),
                                   std::vector<double>(2 * a, 0.0)};
  const model::DiagonalGaussian pw{std::vector<double>(qw.dim(), 0.0),
                                   std::vector<double>(qw.dim(), 0.0)};
  const auto times = model::frame_index_times(seq.length());
  const auto arch = cfg.field();

  ad::Tape tape;
  model::BoundModel bm(model, tape);
  const auto mark = tape.size();

  std::vector<PosteriorSample> out;
  out.reserve(static_cast<std::size_t>(samples));
  for (int l = 0; l < samples; ++l) {
    const auto w = model::sample_gaussian(qw, rng);
    const auto z = model::sample_gaussian(q0, rng);
    PosteriorSample ps;
    model::LatentState z0{{z.value.begin(), z.value.begin() + a},
                          {z.value.begin() + a, z.value.end()}};
    ps.trajectory = model::integrate(arch, z0, z.log_density, w.value, times, steps_per_frame);
    double ll = 0.0;
    for (std::size_t t = 0; t < seq.frames.size(); ++t) {
      tape.truncate(mark);
      const auto& s = ps.trajectory.states[t].s;
      auto logits = model::decode_logits(bm, tape.constant(ad::Tensor::vector(s)));
      const auto& lv = logits.value().data;
      const auto& x = seq.frames[t].pixels;
      Frame p(cfg.resolution);
      for (std::size_t i = 0; i < lv.size(); ++i) {
        p.pixels[i] = 1.0 / (1.0 + std::exp(-lv[i]));
        ll += x[i] * lv[i] - softplus(lv[i]);
      }
      ps.probs.push_back(std::move(p));
    }
    const double ratio_w =
        model::gaussian_log_density(pw, w.value) - model::gaussian_log_density(qw, w.value);
    const double ratio_z =
        model::gaussian_log_density(pz, z.value) - model::gaussian_log_density(q0, z.value);
    ps.log_weight = ll + (ratio_w + ratio_z);
    out.push_back(std::move(ps));
  }
  return out;
}

std::vector<Frame> mean_prediction(std::span<const PosteriorSample> samples) {
  if (samples.empty()) throw DimensionError("mean_prediction: no samples");
  std::vector<Frame> out = samples.front().probs;
  for (std::size_t l = 1; l < samples.size(); ++l)
    for (std::size_t t = 0; t < out.size(); ++t)
      for (std::size_t i = 0; i < out[t].pixels.size(); ++i)
        out[t].pixels[i] += samples[l].probs[t].pixels[i];
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& f : out)
    for (auto& v : f.pixels) v *= inv;
  return out;
}

double nll_importance(std::span<const PosteriorSample> samples) {
  std::vector<double> lw;
  lw.reserve(samples.size());
  for (const auto& s : samples) lw.push_back(s.log_weight);
  return -log_mean_exp(lw);
}

double nll_importance(const model::VariationalModel& model, const data::Sequence& seq,
                      int samples, Rng& rng, int steps_per_frame) {
  return nll_importance(posterior_samples(model, seq, samples, rng, steps_per_frame));
}

LatentNorms latent_norms(std::span<const PosteriorSample> samples) {
  LatentNorms out;
  if (samples.empty()) return out;
  const std::size_t n = samples.front().trajectory.states.size();
  std::vector<double> vel(samples.size()), acc(samples.size());
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; l < samples.size(); ++l) {
      vel[l] = norm(samples[l].trajectory.states[t].v);
      acc[l] = norm(samples[l].trajectory.accels[t]);
    }
    out.velocity.push_back(mean_std(vel));
    out.acceleration.push_back(mean_std(acc));
  }
  return out;
}

std::vector<int> expand_event_windows(std::span<const int> events, int window, int length) {
  if (window < 1 || window % 2 == 0)
    throw ConfigError("event window must be a positive odd integer, got " +
                      std::to_string(window));
  const int half = window / 2;
  std::set<int> out;
  for (int e : events)
    for (int t = std::max(0, e - half); t <= std::min(length - 1, e + half); ++t) out.insert(t);
  return {out.begin(), out.end()};
}

NormBreakdown norm_breakdown(const std::vector<std::vector<double>>& values,
                             const std::vector<std::vector<int>>& windows) {
  if (values.size() != windows.size())
    throw DimensionError("norm_breakdown: " + std::to_string(values.size()) + " cases vs " +
                         std::to_string(windows.size()) + " window sets");
  std::vector<double> ev, nev;
  for (std::size_t c = 0; c < values.size(); ++c) {
    std::vector<char> in(values[c].size(), 0);
    for (int t : windows[c])
      if (t >= 0 && static_cast<std::size_t>(t) < in.size()) in[t] = 1;
    for (std::size_t t = 0; t < values[c].size(); ++t)
      (in[t] ? ev : nev).push_back(values[c][t]);
  }
  NormBreakdown b;
  b.event = {ev.size(), mean_std(ev)};
  b.non_event = {nev.size(), mean_std(nev)};
  return b;
}

void EvalOptions::validate() const {
  if (samples < 1) throw ConfigError("samples must be >= 1");
  if (steps_per_frame < 1) throw ConfigError("steps_per_frame must be >= 1");
  if (event_window < 1 || event_window % 2 == 0)
    throw ConfigError("event window must be a positive odd integer");
  if (head_frames < 1) throw ConfigError("head_frames must be >= 1");
  if (limit < 0) throw ConfigError("limit must be >= 0");
}

CaseResult evaluate_case(const model::VariationalModel& model, const data::Sequence& seq,
                         std::span<const PosteriorSample> samples, int event_window) {
  (void)model;
  CaseResult c;
  const auto pred = mean_prediction(samples);
  c.mse = pixel_mse(pred, seq.frames);
  c.nll = nll_importance(samples);
  c.events = seq.events;
  c.event_frames = expand_event_windows(seq.events, event_window, seq.length());
  const auto n = latent_norms(samples);
  for (std::size_t t = 0; t < n.velocity.size(); ++t) {
    c.velocity_norm.push_back(n.velocity[t].mean);
    c.acceleration_norm.push_back(n.acceleration[t].mean);
  }
  return c;
}

MetricsReport evaluate(const model::VariationalModel& model, std::span<const data::Sequence> test,
                       const EvalOptions& options, const std::string& dataset) {
  options.validate();
  if (test.empty()) throw ConfigError("evaluate: empty test split");
  std::size_t n = test.size();
  if (options.limit > 0) n = std::min(n, static_cast<std::size_t>(options.limit));
  MetricsReport r;
  r.dataset = dataset;
  r.options = options;
  r.length = test.front().length();

  const auto T = static_cast<std::size_t>(r.length);
  std::vector<std::vector<double>> pooled_v(T), pooled_a(T);
  for (std::size_t c = 0; c < n; ++c) {
    if (static_cast<std::size_t>(test[c].length()) != T)
      throw DimensionError("evaluate: sequences differ in length");
    Rng rng(options.seed + c);
    const auto samples =
        posterior_samples(model, test[c], options.samples, rng, options.steps_per_frame);
    auto cr = evaluate_case(model, test[c], samples, options.event_window);
    cr.index = c;
    for (const auto& s : samples)
      for (std::size_t t = 0; t < T; ++t) {
        pooled_v[t].push_back(norm(s.trajectory.states[t].v));
        pooled_a[t].push_back(norm(s.trajectory.accels[t]));
      }
    r.cases.push_back(std::move(cr));
  }

  const std::size_t head = std::min<std::size_t>(T, static_cast<std::size_t>(options.head_frames));
  std::vector<double> col, nlls, heads;
  for (std::size_t t = 0; t < T; ++t) {
    col.clear();
    std::vector<double> ps;
    bool inf = false;
    for (const auto& c : r.cases) {
      col.push_back(c.mse[t]);
      if (auto p = psnr(c.mse[t])) ps.push_back(*p);
      else inf = true;
    }
    r.mse.push_back(mean_std(col));
    r.psnr.push_back(mean_std(ps));
    r.psnr_infinite.push_back(inf);
    r.norms.velocity.push_back(mean_std(pooled_v[t]));
    r.norms.acceleration.push_back(mean_std(pooled_a[t]));
  }
  std::vector<std::vector<double>> vn, an;
  std::vector<std::vector<int>> win;
  for (const auto& c : r.cases) {
    nlls.push_back(c.nll);
    double h = 0.0;
    for (std::size_t t = 0; t < head; ++t) h += c.mse[t];
    heads.push_back(h / static_cast<double>(head));
    vn.push_back(c.velocity_norm);
    an.push_back(c.acceleration_norm);
    win.push_back(c.event_frames);
  }
  r.nll = mean_std(nlls);
  r.head_mse = mean_std(heads);
  r.velocity_breakdown = norm_breakdown(vn, win);
  r.acceleration_breakdown = norm_breakdown(an, win);
  return r;
}

namespace {

json ms(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

json series(const std::vector<MeanStd>& xs) {
  json mean = json::array(), sd = json::array();
  for (const auto& x : xs) {
    mean.push_back(x.mean);
    sd.push_back(x.std);
  }
  return {{"mean", mean}, {"std", sd}};
}

json opt(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

json group(const GroupStats& g) {
  json j = {{"count", g.count}, {"empty", g.empty()}};
  if (!g.empty()) {
    j["mean"] = g.stats.mean;
    j["std"] = g.stats.std;
  }
  return j;
}

json breakdown(const NormBreakdown& b) {
  return {{"event", group(b.event)}, {"non_event", group(b.non_event)}};
}

}  // namespace

json to_json(const MetricsReport& r) {
  json per_time = json::array();
  for (std::size_t t = 0; t < r.mse.size(); ++t) {
    per_time.push_back({{"t", t},
                        {"mse", ms(r.mse[t])},
                        {"psnr", ms(r.psnr[t])},
                        {"psnr_has_infinite", static_cast<bool>(r.psnr_infinite[t])},
                        {"psnr_of_mean_mse", opt(psnr(r.mse[t].mean))}});
  }
  json cases = json::array();
  for (const auto& c : r.cases) {
    json ps = json::array(), inf = json::array();
    for (double m : c.mse) {
      const auto p = psnr(m);
      ps.push_back(opt(p));
      inf.push_back(!p.has_value());
    }
    cases.push_back({{"index", c.index},
                     {"mse", c.mse},
                     {"psnr", ps},
                     {"psnr_infinite", inf},
                     {"nll", c.nll},
                     {"events", c.events},
                     {"event_frames", c.event_frames},
                     {"velocity_norm", c.velocity_norm},
                     {"acceleration_norm", c.acceleration_norm}});
  }
  return {{"dataset", r.dataset},
          {"num_cases", r.cases.size()},
          {"length", r.length},
          {"samples", r.options.samples},
          {"steps_per_frame", r.options.steps_per_frame},
          {"event_window", r.options.event_window},
          {"seed", r.options.seed},
          {"head_frames", r.options.head_frames},
          {"head_mse", ms(r.head_mse)},
          {"nll", ms(r.nll)},
          {"per_time", per_time},
          {"latent_norms",
           {{"velocity", series(r.norms.velocity)},
            {"acceleration", series(r.norms.acceleration)}}},
          {"event_breakdown",
           {{"acceleration", breakdown(r.acceleration_breakdown)},
            {"velocity", breakdown(r.velocity_breakdown)}}},
          {"cases", cases}};
}

}  // namespace o2v::metrics
