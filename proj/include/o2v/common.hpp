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

#include <stdexcept>
#include <string>

namespace o2v {

inline constexpr const char* kVersion = "0.3.0";

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Rejection sampling could not place non-overlapping balls.
class PlacementError : public Error {
 public:
  using Error::Error;
};

// Non-finite latent state during integration.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, double time)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// On-disk dataset / checkpoint problems. Each kind is a distinct failure.
class FormatError : public Error {
 public:
  enum class Kind {
    kUnrecognized,
    kVersionMismatch,
    kTruncated,
    kShapeMismatch,
    kCorrupt,
    kArchitectureMismatch,
    kIo,
  };
  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace o2v
