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

#include <random>

#include "o2v/data/dataset.hpp"
#include "o2v/model/vae_model.hpp"

namespace o2v::testing {

// 8x8 frames, two conv blocks, small field.
inline model::NetworkConfig mini_config(int latent_dim = 2) {
  model::NetworkConfig c;
  c.resolution = 8;
  c.channels = {4, 8};
  c.latent_dim = latent_dim;
  c.amortized_len = 3;
  c.ode_hidden = 8;
  return c;
}

// Random soft frames with a bright blob, length T.
inline data::Sequence random_sequence(int resolution, int T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  data::Sequence s;
  double cx = u(rng) * resolution, cy = u(rng) * resolution;
  const double vx = u(rng) - 0.5, vy = u(rng) - 0.5;
  for (int t = 0; t < T; ++t) {
    data::Frame f(resolution);
    for (int r = 0; r < resolution; ++r)
      for (int c = 0; c < resolution; ++c) {
        const double d2 = (r - cy) * (r - cy) + (c - cx) * (c - cx);
        f.at(r, c) = std::exp(-d2 / 3.0) * 0.9 + 0.05 * u(rng);
      }
    s.frames.push_back(f);
    cx += vx;
    cy += vy;
  }
  return s;
}

}  // namespace o2v::testing
