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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace o2v::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string subcommand;
  nlohmann::json config;
  std::uint64_t seed = 0;
  nlohmann::json artifacts;  // name -> path
  std::string tool_version = kToolVersion;
  std::string started;   // ISO-8601 UTC
  std::string finished;  // ISO-8601 UTC

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;
};

// Manifest location for a run whose primary output is `out`: a directory gets
// `out/run_manifest.json`, a file gets `out.manifest.json`.
std::filesystem::path manifest_path_for_dir(const std::filesystem::path& dir);
std::filesystem::path manifest_path_for_file(const std::filesystem::path& file);

// Default latent dimension for a dataset ("bouncing1", "pendulum", ...).
int default_latent_dim(const std::string& dataset_name);

// Parses and runs one command line (args excludes the program name). Returns
// the process exit code; diagnostics go to `err`, progress to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace o2v::cli
