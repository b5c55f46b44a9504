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


#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fixtures.hpp"
#include "o2v/common.hpp"
#include "o2v/io.hpp"
#include "o2v/train/trainer.hpp"

using namespace o2v;
using namespace o2v::train;
namespace fs = std::filesystem;

namespace {

data::DatasetBundle tiny_bundle(int train, int val, std::uint64_t seed = 3) {
  data::GenerationConfig g;
  g.resolution = 8;
  g.balls.seq_len = 6;
  return data::build_dataset(g, {train, val, 1}, seed);
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.batch_size = 4;
  c.epochs = 2;
  c.latent_dim = 2;
  c.ode_hidden = 8;
  c.steps_per_frame = 2;
  c.seed = 11;
  return c;
}

}  // namespace

TEST_CASE("TrainConfig defaults and validation") {
  TrainConfig c;
  CHECK(c.learning_rate == 1e-3);
  CHECK(c.batch_size == 32);
  CHECK(c.amortized_len == 3);
  CHECK_NOTHROW(c.validate(10));
  c.amortized_len = 11;
  CHECK_THROWS_AS(c.validate(10), ConfigError);
  c = TrainConfig{};
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(10), ConfigError);
  c = TrainConfig{};
  c.kl_warmup_start = 0.0;
  CHECK_THROWS_AS(c.validate(10), ConfigError);

  c = TrainConfig{};
  c.curriculum_epochs = 7;
  c.kl_warmup_epochs = 4;
  c.kl_warmup_start = 0.2;
  CHECK(c.train_length(1, 10) == 3);
  CHECK(c.train_length(2, 10) == 4);
  CHECK(c.train_length(8, 10) == 10);
  CHECK(c.train_length(30, 10) == 10);
  CHECK(c.kl_weight(1) == doctest::Approx(0.2));
  CHECK(c.kl_weight(3) == doctest::Approx(0.6));
  CHECK(c.kl_weight(5) == 1.0);
  CHECK(train_config_from_json(to_json(c)).curriculum_epochs == 7);
  CHECK(TrainConfig{}.train_length(1, 10) == 10);
  CHECK(TrainConfig{}.kl_weight(1) == 1.0);
}

TEST_CASE("Adam with zero gradients leaves parameters unchanged") {
  model::VariationalModel m(testing::mini_config(), 4);
  const auto before = m.params().entries();
  Adam adam(m.params(), 1e-3);
  m.params().zero_grad();
  for (int i = 0; i < 3; ++i) adam.step(m.params());
  for (std::size_t k = 0; k < before.size(); ++k) CHECK(m.params().entries()[k].values == before[k].values);
}

TEST_CASE("Adam first step moves each parameter by about lr against the gradient") {
  model::VariationalModel m(testing::mini_config(), 4);
  m.params().zero_grad();
  auto& e = m.params().at("ode.mean");
  e.grads[0] = 2.0;
  e.grads[1] = -0.5;
  const double v0 = e.values[0], v1 = e.values[1];
  Adam adam(m.params(), 1e-2);
  adam.step(m.params());
  CHECK(e.values[0] == doctest::Approx(v0 - 1e-2).epsilon(1e-5));
  CHECK(e.values[1] == doctest::Approx(v1 + 1e-2).epsilon(1e-5));
}

TEST_CASE("clip_gradients rescales to the maximum norm") {
  model::VariationalModel m(testing::mini_config(), 4);
  m.params().zero_grad();
  m.params().at("ode.mean").grads[0] = 3.0;
  m.params().at("ode.mean").grads[1] = 4.0;
  CHECK(clip_gradients(m.params(), 1.0) == doctest::Approx(5.0));
  CHECK(m.params().at("ode.mean").grads[0] == doctest::Approx(0.6));
  CHECK(clip_gradients(m.params(), 10.0) == doctest::Approx(1.0));
}

TEST_CASE("one small step increases the batch objective under fixed noise") {
  const auto net = testing::mini_config();
  model::VariationalModel m(net, 9);
  std::vector<data::Sequence> seqs;
  for (int i = 0; i < 3; ++i) seqs.push_back(testing::random_sequence(8, 5, 30 + i));
  std::vector<const data::Sequence*> batch;
  for (const auto& s : seqs) batch.push_back(&s);
  objective::ElboOptions opts;
  opts.steps_per_frame = 2;
  opts.penalty = objective::PenaltyConfig::for_network(net, 1.0);
  const double before = batch_objective(m, batch, 77, opts);
  Adam adam(m.params(), 1e-5);
  model::Rng rng(77);
  train_step(m, adam, batch, rng, opts, 1e9);
  const double after = batch_objective(m, batch, 77, opts);
  CHECK(after > before);
}

TEST_CASE("train_step reports divergence on a non-finite objective") {
  const auto net = testing::mini_config();
  model::VariationalModel m(net, 9);
  m.params().at("dec.fc.w").values[0] = std::nan("");
  const auto s = testing::random_sequence(8, 5, 1);
  const data::Sequence* batch[] = {&s};
  objective::ElboOptions opts;
  opts.steps_per_frame = 2;
  opts.penalty = objective::PenaltyConfig::for_network(net, 1.0);
  Adam adam(m.params(), 1e-3);
  model::Rng rng(1);
  CHECK_THROWS_AS(train_step(m, adam, batch, rng, opts, 10.0), DivergenceError);
}

TEST_CASE("zero epochs returns the initialized model and writes it") {
  const auto bundle = tiny_bundle(6, 2);
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const fs::path dir = fs::temp_directory_path() / "o2v_train_zero";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainOutputs out;
  out.checkpoint = dir / "m.ckpt";
  out.log = dir / "log.jsonl";
  const auto r = train::train(bundle, cfg, out);
  CHECK(r.log.epochs.empty());
  model::VariationalModel init(cfg.network(8), cfg.seed);
  initialize_output_bias(init, bundle.train);
  CHECK(model::serialize_checkpoint(r.model) == model::serialize_checkpoint(init));
  CHECK(fs::exists(dir / "m.ckpt"));
  CHECK(fs::exists(best_checkpoint_path(dir / "m.ckpt")));
  CHECK(fs::exists(dir / "log.jsonl"));
  fs::remove_all(dir);
}

TEST_CASE("same seed gives identical checkpoints and logs") {
  const auto bundle = tiny_bundle(8, 2);
  auto cfg = tiny_config();
  cfg.curriculum_epochs = 1;
  cfg.kl_warmup_epochs = 2;
  const auto a = train::train(bundle, cfg);
  const auto b = train::train(bundle, cfg);
  CHECK(model::serialize_checkpoint(a.model) == model::serialize_checkpoint(b.model));
  CHECK(model::serialize_checkpoint(a.best) == model::serialize_checkpoint(b.best));
  REQUIRE(a.log.epochs.size() == 2);
  CHECK(a.log.epochs[0].train_length == 3);
  CHECK(a.log.epochs[1].train_length == 6);
  CHECK(a.log.epochs[0].kl_weight == doctest::Approx(0.05));
  CHECK(a.log.epochs[1].kl_weight == doctest::Approx(0.525));
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK(a.log.epochs[e].train_elbo == b.log.epochs[e].train_elbo);
    CHECK(a.log.epochs[e].validation.total == b.log.epochs[e].validation.total);
  }
  cfg.seed = 12;
  const auto c = train::train(bundle, cfg);
  CHECK(model::serialize_checkpoint(a.model) != model::serialize_checkpoint(c.model));
}

TEST_CASE("training log round-trips and marks the best epoch") {
  const auto bundle = tiny_bundle(8, 2);
  auto cfg = tiny_config();
  cfg.epochs = 3;
  const fs::path dir = fs::temp_directory_path() / "o2v_train_log";
  fs::remove_all(dir);
  fs::create_directories(dir);
  TrainOutputs out;
  out.checkpoint = dir / "m.ckpt";
  out.log = dir / "log.jsonl";
  int calls = 0;
  out.on_epoch = [&](const EpochRecord&) { ++calls; };
  const auto r = train::train(bundle, cfg, out);
  CHECK(calls == 3);
  const auto log = TrainLog::read(dir / "log.jsonl");
  REQUIRE(log.epochs.size() == 3);
  int best = -1;
  double score = -1e300;
  for (const auto& e : r.log.epochs)
    if (e.validation.penalized_total > score) score = e.validation.penalized_total, best = e.epoch;
  double running = -1e300;
  for (const auto& e : r.log.epochs) {
    CHECK(e.best == (e.validation.penalized_total > running));
    running = std::max(running, e.validation.penalized_total);
  }
  CHECK(log.epochs[best - 1].best);
  CHECK(model::serialize_checkpoint(model::load_checkpoint(best_checkpoint_path(dir / "m.ckpt"))) ==
        model::serialize_checkpoint(r.best));
  CHECK(model::serialize_checkpoint(model::load_checkpoint(dir / "m.ckpt")) ==
        model::serialize_checkpoint(r.model));
  for (const auto& e : log.epochs) CHECK(e.param_norms.contains("ode.mean"));
  fs::remove_all(dir);
}

TEST_CASE("toy run improves the training ELBO") {
  const auto bundle = tiny_bundle(40, 4, 21);
  auto cfg = tiny_config();
  cfg.epochs = 8;
  cfg.batch_size = 4;
  cfg.learning_rate = 3e-3;
  const auto r = train::train(bundle, cfg);
  REQUIRE(r.log.epochs.size() == 8);
  CHECK(r.log.epochs.back().train_elbo > r.log.epochs.front().train_elbo);
}
