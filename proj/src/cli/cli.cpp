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


#include "o2v/cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "o2v/common.hpp"
#include "o2v/data/dataset.hpp"
#include "o2v/io.hpp"
#include "o2v/metrics/metrics.hpp"
#include "o2v/model/vae_model.hpp"
#include "o2v/plot/figures.hpp"
#include "o2v/train/trainer.hpp"

namespace o2v::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string abs(const fs::path& p) {
  return p.empty() ? std::string() : fs::absolute(p).lexically_normal().string();
}

template <class T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest config: ") + key + ": " + e.what());
  }
}

data::SplitCounts parse_counts(const std::string& s) {
  std::vector<int> v;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    int n = -1;
    try {
      n = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || item.empty() || n < 0)
      throw ConfigError("--counts expects three non-negative integers TR,VA,TE, got '" + s + "'");
    v.push_back(n);
  }
  if (v.size() != 3)
    throw ConfigError("--counts expects three non-negative integers TR,VA,TE, got '" + s + "'");
  if (v[0] + v[1] + v[2] == 0) throw ConfigError("--counts must request at least one sequence");
  return {v[0], v[1], v[2]};
}

json counts_json(const data::SplitCounts& c) { return json::array({c.train, c.val, c.test}); }

data::SplitCounts counts_from_json(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw ConfigError("manifest config: counts must have three entries");
  return {v[0], v[1], v[2]};
}

// --- generate --------------------------------------------------------------

struct GenerateConfig {
  std::string kind = "bouncing";
  int balls = 1;
  data::SplitCounts counts;
  std::uint64_t seed = 0;
  fs::path out;

  data::GenerationConfig generation() const {
    data::GenerationConfig g;
    g.kind = data::kind_from_string(kind);
    if (g.kind == data::Kind::kBouncing) {
      if (balls < 1) throw ConfigError("--balls must be >= 1");
      g.balls.n_balls = balls;
    }
    return g;
  }
  json to_json() const {
    json j{{"kind", kind}, {"counts", counts_json(counts)}, {"seed", seed}, {"out", abs(out)}};
    if (kind == "bouncing") j["balls"] = balls;
    return j;
  }
  static GenerateConfig from_json(const json& j) {
    GenerateConfig c;
    c.kind = field<std::string>(j, "kind");
    if (j.contains("balls")) c.balls = field<int>(j, "balls");
    c.counts = counts_from_json(j.at("counts"));
    c.seed = field<std::uint64_t>(j, "seed");
    c.out = field<std::string>(j, "out");
    return c;
  }
};

void exec_generate(const GenerateConfig& c, std::ostream& out) {
  RunManifest m{"generate", c.to_json(), c.seed, json::object(), kToolVersion, utc_now(), ""};
  const auto g = c.generation();
  const auto bundle = data::build_dataset(g, c.counts, c.seed);
  data::write_dataset(bundle, c.out);
  m.artifacts = {{"dataset", abs(c.out)}};
  m.finished = utc_now();
  m.write(manifest_path_for_dir(c.out));
  out << "wrote " << g.name() << " (" << c.counts.train << "/" << c.counts.val << "/"
      << c.counts.test << ") to " << c.out.string() << "\n";
}

// --- train -----------------------------------------------------------------

struct TrainCmdConfig {
  fs::path data;
  fs::path out;
  fs::path log;
  train::TrainConfig train;

  json to_json() const {
    return {{"data", abs(data)},
            {"out", abs(out)},
            {"log", abs(log)},
            {"train", train::to_json(train)}};
  }
  static TrainCmdConfig from_json(const json& j) {
    TrainCmdConfig c;
    c.data = field<std::string>(j, "data");
    c.out = field<std::string>(j, "out");
    c.log = field<std::string>(j, "log");
    c.train = train::train_config_from_json(j.at("train"));
    return c;
  }
};

fs::path default_log_path(const fs::path& ckpt) {
  auto p = ckpt;
  p += ".log.jsonl";
  return p;
}

void exec_train(const TrainCmdConfig& c, const data::DatasetBundle& dataset, std::ostream& out) {
  RunManifest m{"train", c.to_json(), c.train.seed, json::object(), kToolVersion, utc_now(), ""};
  if (c.out.has_parent_path()) fs::create_directories(c.out.parent_path());
  train::TrainOutputs outputs;
  outputs.checkpoint = c.out;
  outputs.log = c.log;
  outputs.on_epoch = [&out](const train::EpochRecord& r) {
    out << "epoch " << r.epoch << " train_elbo " << r.train_elbo << " val_elbo "
        << r.validation.total << (r.best ? " *" : "") << "\n";
  };
  train::train(dataset, c.train, outputs);
  m.artifacts = {{"checkpoint", abs(c.out)},
                 {"best_checkpoint", abs(train::best_checkpoint_path(c.out))},
                 {"log", abs(c.log)}};
  m.finished = utc_now();
  m.write(manifest_path_for_file(c.out));
}

// --- eval ------------------------------------------------------------------

struct EvalCmdConfig {
  fs::path data;
  fs::path ckpt;
  fs::path report;
  metrics::EvalOptions options;

  json to_json() const {
    return {{"data", abs(data)},
            {"ckpt", abs(ckpt)},
            {"report", abs(report)},
            {"samples", options.samples},
            {"steps_per_frame", options.steps_per_frame},
            {"window", options.event_window},
            {"head_frames", options.head_frames},
            {"seed", options.seed},
            {"limit", options.limit}};
  }
  static EvalCmdConfig from_json(const json& j) {
    EvalCmdConfig c;
    c.data = field<std::string>(j, "data");
    c.ckpt = field<std::string>(j, "ckpt");
    c.report = field<std::string>(j, "report");
    c.options.samples = field<int>(j, "samples");
    c.options.steps_per_frame = field<int>(j, "steps_per_frame");
    c.options.event_window = field<int>(j, "window");
    c.options.head_frames = field<int>(j, "head_frames");
    c.options.seed = field<std::uint64_t>(j, "seed");
    c.options.limit = field<int>(j, "limit");
    return c;
  }
};

model::VariationalModel load_compatible(const fs::path& ckpt, const data::DatasetBundle& d) {
  auto m = model::load_checkpoint(ckpt);
  const auto& net = m.config();
  if (net.resolution != d.resolution())
    throw FormatError(FormatError::Kind::kArchitectureMismatch,
                      "checkpoint resolution " + std::to_string(net.resolution) +
                          " does not match dataset resolution " +
                          std::to_string(d.resolution()));
  if (net.amortized_len > d.seq_len())
    throw FormatError(FormatError::Kind::kArchitectureMismatch,
                      "checkpoint amortized length exceeds the dataset sequence length");
  return m;
}

void exec_eval(const EvalCmdConfig& c, std::ostream& out) {
  RunManifest m{"eval", c.to_json(), c.options.seed, json::object(), kToolVersion, utc_now(), ""};
  c.options.validate();
  const auto dataset = data::read_dataset(c.data);
  const auto model = load_compatible(c.ckpt, dataset);
  const auto report = metrics::evaluate(model, dataset.test, c.options, dataset.config.name());
  if (c.report.has_parent_path()) fs::create_directories(c.report.parent_path());
  io::write_file_atomic(c.report, metrics::to_json(report).dump(2) + "\n");
  m.artifacts = {{"report", abs(c.report)}};
  m.finished = utc_now();
  m.write(manifest_path_for_file(c.report));
  out << "test MSE (first " << c.options.head_frames << " frames) " << report.head_mse.mean
      << ", NLL " << report.nll.mean << " over " << report.cases.size() << " cases\n";
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeCmdConfig {
  fs::path data;
  fs::path ckpt;
  fs::path out;
  int case_index = 0;
  metrics::EvalOptions options;

  json to_json() const {
    return {{"data", abs(data)},
            {"ckpt", abs(ckpt)},
            {"out", abs(out)},
            {"case_index", case_index},
            {"samples", options.samples},
            {"steps_per_frame", options.steps_per_frame},
            {"window", options.event_window},
            {"seed", options.seed},
            {"limit", options.limit}};
  }
  static AnalyzeCmdConfig from_json(const json& j) {
    AnalyzeCmdConfig c;
    c.data = field<std::string>(j, "data");
    c.ckpt = field<std::string>(j, "ckpt");
    c.out = field<std::string>(j, "out");
    c.case_index = field<int>(j, "case_index");
    c.options.samples = field<int>(j, "samples");
    c.options.steps_per_frame = field<int>(j, "steps_per_frame");
    c.options.event_window = field<int>(j, "window");
    c.options.seed = field<std::uint64_t>(j, "seed");
    c.options.limit = field<int>(j, "limit");
    return c;
  }
};

void exec_analyze(const AnalyzeCmdConfig& c, std::ostream& out) {
  RunManifest m{"analyze", c.to_json(), c.options.seed, json::object(), kToolVersion, utc_now(),
                ""};
  c.options.validate();
  const auto dataset = data::read_dataset(c.data);
  const auto model = load_compatible(c.ckpt, dataset);
  const auto report = metrics::evaluate(model, dataset.test, c.options, dataset.config.name());
  if (c.case_index < 0 || c.case_index >= static_cast<int>(report.cases.size()))
    throw ConfigError("--case-index " + std::to_string(c.case_index) + " outside [0, " +
                      std::to_string(report.cases.size()) + ")");
  const auto& seq = dataset.test[c.case_index];
  metrics::Rng rng(c.options.seed + static_cast<std::uint64_t>(c.case_index));
  const auto samples = metrics::posterior_samples(model, seq, c.options.samples, rng,
                                                  c.options.steps_per_frame);
  const auto prediction = metrics::mean_prediction(samples);
  const std::string name = dataset.config.name();
  const std::string ci = "case" + std::to_string(c.case_index);
  const auto& cr = report.cases[c.case_index];

  fs::create_directories(c.out);
  std::vector<std::string> files;
  auto emit = [&](const plot::Figure& fig, const std::string& stem) {
    for (const auto& p : plot::save(fig, c.out / stem)) files.push_back(abs(p));
  };
  emit(plot::norm_overlay(metrics::latent_norms(samples), cr.event_frames, prediction, seq.frames,
                          name + " test case " + std::to_string(c.case_index)),
       name + "_norms_" + ci);
  emit(plot::latent_panel(samples, cr.event_frames, name + " latent trajectories, " + ci),
       name + "_latents_" + ci);
  emit(plot::breakdown_bars(report.acceleration_breakdown, report.velocity_breakdown,
                            c.options.event_window, name + " event vs non-event norms"),
       name + "_breakdown_all");
  emit(plot::time_series(report.mse, "pixel MSE", name + " test MSE"), name + "_mse_all");
  emit(plot::time_series(report.psnr, "PSNR (dB)", name + " test PSNR"), name + "_psnr_all");

  const json full = metrics::to_json(report);
  json breakdown = full.at("event_breakdown");
  breakdown["dataset"] = name;
  breakdown["window"] = c.options.event_window;
  breakdown["num_cases"] = report.cases.size();
  breakdown["length"] = report.length;
  breakdown["case"] = {{"index", c.case_index},
                       {"events", cr.events},
                       {"event_frames", cr.event_frames}};
  const fs::path bpath = c.out / (name + "_breakdown.json");
  io::write_file_atomic(bpath, breakdown.dump(2) + "\n");
  files.push_back(abs(bpath));

  m.artifacts = {{"files", files}};
  m.finished = utc_now();
  m.write(manifest_path_for_dir(c.out));
  const auto& ab = report.acceleration_breakdown;
  out << "acceleration norm: event " << (ab.event.empty() ? 0.0 : ab.event.stats.mean)
      << " (n=" << ab.event.count << "), non-event "
      << (ab.non_event.empty() ? 0.0 : ab.non_event.stats.mean) << " (n=" << ab.non_event.count
      << ")\n";
  if (ab.event.empty() || ab.non_event.empty())
    out << "warning: an event group is empty; breakdown figure marks it\n";
}

// --- reproduce ---------------------------------------------------------------

struct ReproduceConfig {
  GenerateConfig generate;
  train::TrainConfig train;
  metrics::EvalOptions eval;
  int case_index = 0;
  fs::path out;

  json to_json() const {
    json g = generate.to_json();
    g.erase("out");
    return {{"generate", g},
            {"train", train::to_json(train)},
            {"samples", eval.samples},
            {"window", eval.event_window},
            {"eval_seed", eval.seed},
            {"limit", eval.limit},
            {"case_index", case_index},
            {"out", abs(out)}};
  }
  static ReproduceConfig from_json(const json& j) {
    ReproduceConfig c;
    c.out = field<std::string>(j, "out");
    json g = j.at("generate");
    g["out"] = (c.out / "data").string();
    c.generate = GenerateConfig::from_json(g);
    c.train = train::train_config_from_json(j.at("train"));
    c.eval.samples = field<int>(j, "samples");
    c.eval.event_window = field<int>(j, "window");
    c.eval.seed = field<std::uint64_t>(j, "eval_seed");
    c.eval.limit = field<int>(j, "limit");
    c.eval.steps_per_frame = c.train.steps_per_frame;
    c.case_index = field<int>(j, "case_index");
    return c;
  }
};

void exec_reproduce(const ReproduceConfig& c, std::ostream& out) {
  RunManifest m{"reproduce", c.to_json(), c.train.seed, json::object(), kToolVersion, utc_now(),
                ""};
  fs::create_directories(c.out);
  auto gen = c.generate;
  gen.out = c.out / "data";
  exec_generate(gen, out);

  TrainCmdConfig tc;
  tc.data = gen.out;
  tc.out = c.out / "model.ckpt";
  tc.log = default_log_path(tc.out);
  tc.train = c.train;
  exec_train(tc, data::read_dataset(tc.data), out);

  EvalCmdConfig ec;
  ec.data = gen.out;
  ec.ckpt = tc.out;
  ec.report = c.out / "report.json";
  ec.options = c.eval;
  exec_eval(ec, out);

  AnalyzeCmdConfig ac;
  ac.data = gen.out;
  ac.ckpt = tc.out;
  ac.out = c.out / "figures";
  ac.case_index = c.case_index;
  ac.options = c.eval;
  exec_analyze(ac, out);

  m.artifacts = {{"dataset", abs(gen.out)},
                 {"checkpoint", abs(tc.out)},
                 {"report", abs(ec.report)},
                 {"figures", abs(ac.out)}};
  m.finished = utc_now();
  m.write(manifest_path_for_dir(c.out));
}

// --- replay ------------------------------------------------------------------

void exec_replay(const fs::path& manifest, const std::optional<fs::path>& redirect,
                 std::ostream& out) {
  const auto m = RunManifest::read(manifest);
  const json& j = m.config;
  auto moved = [&](const fs::path& p) { return redirect ? *redirect / p.filename() : p; };
  if (m.subcommand == "generate") {
    auto c = GenerateConfig::from_json(j);
    if (redirect) c.out = *redirect;
    exec_generate(c, out);
  } else if (m.subcommand == "train") {
    auto c = TrainCmdConfig::from_json(j);
    c.out = moved(c.out);
    c.log = moved(c.log);
    exec_train(c, data::read_dataset(c.data), out);
  } else if (m.subcommand == "eval") {
    auto c = EvalCmdConfig::from_json(j);
    c.report = moved(c.report);
    exec_eval(c, out);
  } else if (m.subcommand == "analyze") {
    auto c = AnalyzeCmdConfig::from_json(j);
    if (redirect) c.out = *redirect;
    exec_analyze(c, out);
  } else if (m.subcommand == "reproduce") {
    auto c = ReproduceConfig::from_json(j);
    if (redirect) c.out = *redirect;
    exec_reproduce(c, out);
  } else {
    throw ConfigError("manifest names unknown subcommand '" + m.subcommand + "'");
  }
}

int guarded(const std::function<void()>& f, std::ostream& err) {
  try {
    f();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

void add_train_flags(CLI::App* cmd, train::TrainConfig& t, std::optional<int>& latent_dim) {
  cmd->add_option("--latent-dim", latent_dim, "latent dimension a (default by dataset)")
      ->envname("O2V_LATENT_DIM");
  cmd->add_option("--epochs", t.epochs, "training epochs")->envname("O2V_EPOCHS")
      ->capture_default_str();
  cmd->add_option("--lr", t.learning_rate, "Adam learning rate")->envname("O2V_LR")
      ->capture_default_str();
  cmd->add_option("--batch", t.batch_size, "mini-batch size")->envname("O2V_BATCH")
      ->capture_default_str();
  cmd->add_option("--gamma", t.gamma, "consistency weight")->envname("O2V_GAMMA")
      ->capture_default_str();
  cmd->add_option("--amortized-len", t.amortized_len, "frames seen by the velocity encoder")
      ->envname("O2V_AMORTIZED_LEN")->capture_default_str();
  cmd->add_option("--steps-per-frame", t.steps_per_frame, "RK4 steps per frame interval")
      ->envname("O2V_STEPS_PER_FRAME")->capture_default_str();
  cmd->add_option("--ode-hidden", t.ode_hidden, "hidden width of the acceleration field")
      ->envname("O2V_ODE_HIDDEN")->capture_default_str();
  cmd->add_option("--seed", t.seed, "initialization and noise seed")->envname("O2V_SEED")
      ->capture_default_str();
  cmd->add_option("--checkpoint-every", t.checkpoint_every, "epochs between checkpoints")
      ->envname("O2V_CHECKPOINT_EVERY")->capture_default_str();
  cmd->add_option("--val-limit", t.val_limit, "validation sequences per epoch (0 = all)")
      ->envname("O2V_VAL_LIMIT")->capture_default_str();
  cmd->add_option("--curriculum-epochs", t.curriculum_epochs,
                  "epochs to grow the training prefix to full length (0 = off)")
      ->envname("O2V_CURRICULUM_EPOCHS")->capture_default_str();
  cmd->add_option("--kl-warmup-epochs", t.kl_warmup_epochs,
                  "epochs to ramp the latent density weight to 1 (0 = off)")
      ->envname("O2V_KL_WARMUP_EPOCHS")->capture_default_str();
  cmd->add_option("--kl-warmup-start", t.kl_warmup_start, "initial latent density weight")
      ->envname("O2V_KL_WARMUP_START")->capture_default_str();
}

void add_eval_flags(CLI::App* cmd, metrics::EvalOptions& o) {
  cmd->add_option("--samples", o.samples, "posterior samples per test case")
      ->envname("O2V_SAMPLES")->capture_default_str();
  cmd->add_option("--window", o.event_window, "odd event window size")->envname("O2V_WINDOW")
      ->capture_default_str();
  cmd->add_option("--limit", o.limit, "test cases evaluated (0 = all)")->envname("O2V_LIMIT")
      ->capture_default_str();
}

}  // namespace

// --- RunManifest ---------------------------------------------------------------

json RunManifest::to_json() const {
  return {{"subcommand", subcommand}, {"config", config},       {"seed", seed},
          {"artifacts", artifacts},   {"tool_version", tool_version},
          {"started", started},       {"finished", finished}};
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  try {
    m.subcommand = j.at("subcommand").get<std::string>();
    m.config = j.at("config");
    m.seed = j.at("seed").get<std::uint64_t>();
    m.artifacts = j.at("artifacts");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started = j.at("started").get<std::string>();
    m.finished = j.at("finished").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::kCorrupt, std::string("run manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::read(const fs::path& path) {
  try {
    return from_json(json::parse(io::read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError(FormatError::Kind::kCorrupt, path.string() + ": " + e.what());
  }
}

void RunManifest::write(const fs::path& path) const {
  io::write_file_atomic(path, to_json().dump(2) + "\n");
}

fs::path manifest_path_for_dir(const fs::path& dir) { return dir / "run_manifest.json"; }

fs::path manifest_path_for_file(const fs::path& file) {
  auto p = file;
  p += ".manifest.json";
  return p;
}

int default_latent_dim(const std::string& name) {
  if (name == "bouncing1") return 3;
  if (name == "bouncing2") return 5;
  if (name == "bouncing3") return 8;
  if (name == "pendulum") return 2;
  if (name == "projectile") return 9;
  if (name.rfind("bouncing", 0) == 0) return 8;
  throw ConfigError("no default latent dimension for dataset '" + name + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ODE2VAE: second-order latent ODE video models", "o2v"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // generate
  GenerateConfig gen;
  std::string gen_counts = "10000,500,500";
  auto* g = app.add_subcommand("generate", "simulate and render a dataset");
  g->add_option("--kind", gen.kind, "dataset kind")
      ->check(CLI::IsMember({"bouncing", "pendulum", "projectile"}))
      ->envname("O2V_KIND")->capture_default_str();
  auto* balls_opt = g->add_option("--balls", gen.balls, "number of balls (bouncing only)")
                        ->envname("O2V_BALLS")->capture_default_str();
  g->add_option("--counts", gen_counts, "train,val,test sequence counts")
      ->envname("O2V_COUNTS")->capture_default_str();
  g->add_option("--seed", gen.seed, "base seed")->envname("O2V_SEED")->capture_default_str();
  g->add_option("--out", gen.out, "output dataset directory")->required()->envname("O2V_OUT");

  // train
  TrainCmdConfig tc;
  std::optional<int> train_latent;
  std::string train_log;
  auto* t = app.add_subcommand("train", "fit a model to a dataset");
  t->add_option("--data", tc.data, "dataset directory")->required()->envname("O2V_DATA");
  t->add_option("--out", tc.out, "checkpoint path")->required()->envname("O2V_OUT");
  t->add_option("--log", train_log, "training log (default <out>.log.jsonl)")
      ->envname("O2V_LOG");
  add_train_flags(t, tc.train, train_latent);

  // eval
  EvalCmdConfig ec;
  auto* e = app.add_subcommand("eval", "score a checkpoint on the test split");
  e->add_option("--data", ec.data, "dataset directory")->required()->envname("O2V_DATA");
  e->add_option("--ckpt", ec.ckpt, "checkpoint")->required()->envname("O2V_CKPT");
  e->add_option("--report", ec.report, "report JSON path")->required()->envname("O2V_REPORT");
  e->add_option("--seed", ec.options.seed, "sampling seed")->envname("O2V_SEED")
      ->capture_default_str();
  e->add_option("--steps-per-frame", ec.options.steps_per_frame, "RK4 steps per frame")
      ->envname("O2V_STEPS_PER_FRAME")->capture_default_str();
  e->add_option("--head-frames", ec.options.head_frames, "frames in the short-horizon MSE")
      ->envname("O2V_HEAD_FRAMES")->capture_default_str();
  add_eval_flags(e, ec.options);

  // analyze
  AnalyzeCmdConfig ac;
  auto* a = app.add_subcommand("analyze", "latent norm figures and event breakdown");
  a->add_option("--data", ac.data, "dataset directory")->required()->envname("O2V_DATA");
  a->add_option("--ckpt", ac.ckpt, "checkpoint")->required()->envname("O2V_CKPT");
  a->add_option("--out", ac.out, "figure directory")->required()->envname("O2V_OUT");
  a->add_option("--case-index", ac.case_index, "test case for per-case figures")
      ->envname("O2V_CASE_INDEX")->capture_default_str();
  a->add_option("--seed", ac.options.seed, "sampling seed")->envname("O2V_SEED")
      ->capture_default_str();
  a->add_option("--steps-per-frame", ac.options.steps_per_frame, "RK4 steps per frame")
      ->envname("O2V_STEPS_PER_FRAME")->capture_default_str();
  add_eval_flags(a, ac.options);

  // reproduce
  ReproduceConfig rc;
  rc.train.epochs = 5;
  rc.eval.limit = 0;
  std::string rep_counts = "200,50,50";
  std::optional<int> rep_latent;
  std::uint64_t rep_data_seed = 1;
  auto* r = app.add_subcommand("reproduce", "generate, train, eval and analyze at small scale");
  r->add_option("--out", rc.out, "output directory")->required()->envname("O2V_OUT");
  r->add_option("--kind", rc.generate.kind, "dataset kind")
      ->check(CLI::IsMember({"bouncing", "pendulum", "projectile"}))
      ->envname("O2V_KIND")->capture_default_str();
  auto* rep_balls = r->add_option("--balls", rc.generate.balls, "number of balls (bouncing only)")
                        ->envname("O2V_BALLS")->capture_default_str();
  r->add_option("--counts", rep_counts, "train,val,test sequence counts")
      ->envname("O2V_COUNTS")->capture_default_str();
  r->add_option("--data-seed", rep_data_seed, "dataset base seed")->envname("O2V_DATA_SEED")
      ->capture_default_str();
  r->add_option("--case-index", rc.case_index, "test case for per-case figures")
      ->envname("O2V_CASE_INDEX")->capture_default_str();
  add_train_flags(r, rc.train, rep_latent);
  add_eval_flags(r, rc.eval);

  // replay
  fs::path replay_manifest;
  std::optional<fs::path> replay_out;
  auto* p = app.add_subcommand("replay", "re-run a command from its run manifest");
  p->add_option("manifest", replay_manifest, "run manifest")->required();
  p->add_option("--out", replay_out, "write outputs under this directory instead");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto resolve_latent = [](train::TrainConfig& cfg, const std::optional<int>& given,
                           const std::string& name) {
    cfg.latent_dim = given ? *given : default_latent_dim(name);
  };
  auto check_balls = [](const std::string& kind, const CLI::Option* opt) {
    if (kind != "bouncing" && opt->count() > 0)
      throw ConfigError("--balls is only valid with --kind bouncing");
  };

  if (g->parsed()) {
    return guarded(
        [&] {
          check_balls(gen.kind, balls_opt);
          gen.counts = parse_counts(gen_counts);
          exec_generate(gen, out);
        },
        err);
  }
  if (t->parsed()) {
    return guarded(
        [&] {
          tc.log = train_log.empty() ? default_log_path(tc.out) : fs::path(train_log);
          const auto dataset = data::read_dataset(tc.data);
          resolve_latent(tc.train, train_latent, dataset.config.name());
          tc.train.validate(dataset.seq_len());
          exec_train(tc, dataset, out);
        },
        err);
  }
  if (e->parsed()) return guarded([&] { exec_eval(ec, out); }, err);
  if (a->parsed()) return guarded([&] { exec_analyze(ac, out); }, err);
  if (r->parsed()) {
    return guarded(
        [&] {
          check_balls(rc.generate.kind, rep_balls);
          rc.generate.counts = parse_counts(rep_counts);
          rc.generate.seed = rep_data_seed;
          resolve_latent(rc.train, rep_latent, rc.generate.generation().name());
          rc.eval.steps_per_frame = rc.train.steps_per_frame;
          rc.eval.validate();
          rc.train.validate(rc.generate.generation().seq_len());
          exec_reproduce(rc, out);
        },
        err);
  }
  return guarded([&] { exec_replay(replay_manifest, replay_out, out); }, err);
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace o2v::cli
