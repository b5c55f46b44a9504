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


#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "o2v/cli/cli.hpp"
#include "o2v/io.hpp"
#include "o2v/model/vae_model.hpp"

using namespace o2v;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

json read_json(const fs::path& p) { return json::parse(io::read_file(p)); }

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name) : dir(fs::temp_directory_path() / name) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string operator/(const std::string& s) const { return (dir / s).string(); }
};

// Dataset of 6/2/3 bouncing(1) sequences plus a one-epoch checkpoint.
struct Trained {
  Workspace ws{"o2v_cli_trained"};
  Trained() {
    REQUIRE(invoke({"generate", "--counts", "6,2,3", "--seed", "5", "--out", ws / "d"}).code == 0);
    REQUIRE(invoke({"train", "--data", ws / "d", "--epochs", "1", "--batch", "3", "--steps-per-frame",
                 "2", "--ode-hidden", "8", "--out", ws / "m.ckpt"})
                .code == 0);
  }
};

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  Workspace ws("o2v_cli_usage");
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"bogus"}).code == cli::kExitUsage);
  const auto r = invoke({"train", "--out", ws / "x.ckpt"});
  CHECK(r.code == cli::kExitUsage);
  CHECK(r.err.find("--data") != std::string::npos);
  const auto p = invoke({"generate", "--kind", "pendulum", "--balls", "2", "--out", ws / "p"});
  CHECK(p.code == cli::kExitUsage);
  CHECK(p.err.find("--balls") != std::string::npos);
  CHECK(!fs::exists(ws.dir / "p"));
  CHECK(invoke({"generate", "--kind", "cube", "--out", ws / "c"}).code == cli::kExitUsage);
  CHECK(invoke({"generate", "--counts", "1,2", "--out", ws / "c"}).code == cli::kExitUsage);
  CHECK(invoke({"generate", "--counts", "1,x,2", "--out", ws / "c"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("help shows the default split counts") {
  const auto r = invoke({"generate", "--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("10000,500,500") != std::string::npos);
}

TEST_CASE("runtime failures exit with code 3") {
  Workspace ws("o2v_cli_runtime");
  const auto r = invoke({"train", "--data", ws / "missing", "--out", ws / "m.ckpt"});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(!r.err.empty());
  CHECK(invoke({"replay", ws / "nope.json"}).code == cli::kExitRuntime);
}

TEST_CASE("generate writes a readable dataset and a manifest") {
  Workspace ws("o2v_cli_generate");
  const auto r = invoke({"generate", "--kind", "bouncing", "--balls", "1", "--counts", "10,2,2",
                      "--seed", "1", "--out", ws / "d"});
  REQUIRE(r.code == 0);
  const auto d = data::read_dataset(ws.dir / "d");
  CHECK(d.train.size() == 10);
  CHECK(d.val.size() == 2);
  CHECK(d.test.size() == 2);
  CHECK(d.config.name() == "bouncing1");
  const auto m = cli::RunManifest::read(ws.dir / "d" / "run_manifest.json");
  CHECK(m.subcommand == "generate");
  CHECK(m.seed == 1);
  CHECK(m.config.at("counts") == json::array({10, 2, 2}));
  CHECK(m.tool_version == cli::kToolVersion);
  CHECK(!m.started.empty());
  REQUIRE(invoke({"generate", "--kind", "pendulum", "--counts", "2,1,1", "--out", ws / "p"}).code == 0);
  CHECK(data::read_dataset(ws.dir / "p").config.name() == "pendulum");
}

TEST_CASE("default latent dimensions by dataset") {
  CHECK(cli::default_latent_dim("bouncing1") == 3);
  CHECK(cli::default_latent_dim("bouncing2") == 5);
  CHECK(cli::default_latent_dim("bouncing3") == 8);
  CHECK(cli::default_latent_dim("pendulum") == 2);
  CHECK(cli::default_latent_dim("projectile") == 9);
}

TEST_CASE("train echoes the default hyperparameters into its manifest") {
  Workspace ws("o2v_cli_train");
  REQUIRE(invoke({"generate", "--counts", "4,1,1", "--out", ws / "d"}).code == 0);
  REQUIRE(invoke({"train", "--data", ws / "d", "--epochs", "0", "--out", ws / "m.ckpt"}).code == 0);
  const auto m = cli::RunManifest::read(ws.dir / "m.ckpt.manifest.json");
  const auto& t = m.config.at("train");
  CHECK(t.at("learning_rate") == 0.001);
  CHECK(t.at("batch_size") == 32);
  CHECK(t.at("amortized_len") == 3);
  CHECK(t.at("latent_dim") == 3);
  CHECK(t.at("gamma") == 1.0);
  CHECK(fs::exists(ws.dir / "m.ckpt"));
  CHECK(fs::exists(ws.dir / "m.ckpt.log.jsonl"));
  CHECK(model::load_checkpoint(ws.dir / "m.ckpt").config().latent_dim == 3);
}

TEST_CASE("environment variables override defaults") {
  Workspace ws("o2v_cli_env");
  REQUIRE(invoke({"generate", "--counts", "4,1,1", "--out", ws / "d"}).code == 0);
  ::setenv("O2V_LATENT_DIM", "4", 1);
  ::setenv("O2V_LR", "0.005", 1);
  const auto r = invoke({"train", "--data", ws / "d", "--epochs", "0", "--out", ws / "m.ckpt"});
  ::unsetenv("O2V_LATENT_DIM");
  ::unsetenv("O2V_LR");
  REQUIRE(r.code == 0);
  const auto t = cli::RunManifest::read(ws.dir / "m.ckpt.manifest.json").config.at("train");
  CHECK(t.at("latent_dim") == 4);
  CHECK(t.at("learning_rate") == 0.005);
}

TEST_CASE("eval report shape, defaults and determinism") {
  Trained tr;
  auto& ws = tr.ws;
  REQUIRE(invoke({"eval", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--samples", "3",
               "--steps-per-frame", "2", "--report", ws / "r1.json"})
              .code == 0);
  REQUIRE(invoke({"eval", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--samples", "3",
               "--steps-per-frame", "2", "--report", ws / "r2.json"})
              .code == 0);
  CHECK(io::read_file(ws.dir / "r1.json") == io::read_file(ws.dir / "r2.json"));
  const auto rep = read_json(ws.dir / "r1.json");
  CHECK(rep.at("per_time").size() == 10);
  CHECK(rep.at("num_cases") == 3);
  const auto m = cli::RunManifest::read(ws.dir / "r1.json.manifest.json");
  CHECK(m.config.at("samples") == 3);

  const auto r = invoke({"eval", "--help"});
  CHECK(r.out.find("10") != std::string::npos);
  REQUIRE(invoke({"eval", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--limit", "1",
               "--steps-per-frame", "2", "--report", ws / "r3.json"})
              .code == 0);
  CHECK(cli::RunManifest::read(ws.dir / "r3.json.manifest.json").config.at("samples") == 10);
}

TEST_CASE("eval rejects an incompatible checkpoint with code 3") {
  Trained tr;
  auto& ws = tr.ws;
  data::GenerationConfig g;
  g.resolution = 16;
  data::write_dataset(data::build_dataset(g, {1, 1, 1}, 0), ws.dir / "d16");
  const auto r = invoke({"eval", "--data", ws / "d16", "--ckpt", ws / "m.ckpt", "--report",
                      ws / "bad.json"});
  CHECK(r.code == cli::kExitRuntime);
  CHECK(!fs::exists(ws.dir / "bad.json"));
}

TEST_CASE("analyze emits figures and a partitioned breakdown") {
  Trained tr;
  auto& ws = tr.ws;
  REQUIRE(invoke({"analyze", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--samples", "2",
               "--steps-per-frame", "2", "--case-index", "1", "--out", ws / "figs"})
              .code == 0);
  for (const char* stem : {"bouncing1_norms_case1", "bouncing1_latents_case1",
                           "bouncing1_breakdown_all", "bouncing1_mse_all", "bouncing1_psnr_all"}) {
    CHECK(fs::file_size(ws.dir / "figs" / (std::string(stem) + ".png")) > 100);
    CHECK(fs::file_size(ws.dir / "figs" / (std::string(stem) + ".pdf")) > 100);
  }
  const auto b = read_json(ws.dir / "figs" / "bouncing1_breakdown.json");
  CHECK(b.at("window") == 3);
  for (const char* q : {"acceleration", "velocity"}) {
    const int n = b.at(q).at("event").at("count").get<int>() +
                  b.at(q).at("non_event").at("count").get<int>();
    CHECK(n == 3 * 10);
  }
  CHECK(invoke({"analyze", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--case-index", "7",
             "--out", ws / "f2"})
            .code == cli::kExitUsage);
  CHECK(invoke({"analyze", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--window", "4", "--out",
             ws / "f3"})
            .code == cli::kExitUsage);
}

TEST_CASE("replay reproduces every artifact byte for byte") {
  Trained tr;
  auto& ws = tr.ws;
  REQUIRE(invoke({"eval", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--samples", "2",
               "--steps-per-frame", "2", "--report", ws / "rep.json"})
              .code == 0);
  REQUIRE(invoke({"analyze", "--data", ws / "d", "--ckpt", ws / "m.ckpt", "--samples", "2",
               "--steps-per-frame", "2", "--out", ws / "figs"})
              .code == 0);
  const std::pair<std::string, std::string> runs[] = {{"d/run_manifest.json", "d"},
                                                      {"m.ckpt.manifest.json", "m"},
                                                      {"rep.json.manifest.json", "e"},
                                                      {"figs/run_manifest.json", "figs"}};
  for (const auto& [manifest, sub] : runs)
    REQUIRE(invoke({"replay", ws / manifest, "--out", ws / ("replay/" + sub)}).code == 0);
  auto same = [&](const fs::path& a, const fs::path& b) {
    return io::read_file(ws.dir / a) == io::read_file(ws.dir / b);
  };
  for (const char* s : {"train", "val", "test"}) {
    CHECK(same(fs::path("d") / s / "frames.bin", fs::path("replay/d") / s / "frames.bin"));
    CHECK(same(fs::path("d") / s / "events.json", fs::path("replay/d") / s / "events.json"));
  }
  CHECK(same("m.ckpt", "replay/m/m.ckpt"));
  CHECK(same("m.ckpt.best", "replay/m/m.ckpt.best"));
  CHECK(same("rep.json", "replay/e/rep.json"));
  for (const auto& f : fs::directory_iterator(ws.dir / "figs")) {
    const auto name = f.path().filename();
    if (name == "run_manifest.json") continue;
    CHECK(same(fs::path("figs") / name, fs::path("replay/figs") / name));
  }
  CHECK(fs::exists(ws.dir / "replay/m/m.ckpt.manifest.json"));
}

TEST_CASE("reproduce chains every stage") {
  Workspace ws("o2v_cli_reproduce");
  const auto r = invoke({"reproduce", "--counts", "4,2,2", "--epochs", "1", "--batch", "2",
                      "--steps-per-frame", "2", "--ode-hidden", "8", "--samples", "2", "--out",
                      ws / "run"});
  REQUIRE(r.code == 0);
  for (const char* f : {"run_manifest.json", "data/run_manifest.json", "model.ckpt",
                        "model.ckpt.manifest.json", "report.json", "report.json.manifest.json",
                        "figures/run_manifest.json", "figures/bouncing1_breakdown.json"})
    CHECK(fs::exists(ws.dir / "run" / f));
  REQUIRE(invoke({"replay", ws / "run/run_manifest.json", "--out", ws / "again"}).code == 0);
  CHECK(io::read_file(ws.dir / "run/report.json") == io::read_file(ws.dir / "again/report.json"));
  CHECK(io::read_file(ws.dir / "run/model.ckpt") == io::read_file(ws.dir / "again/model.ckpt"));
}
