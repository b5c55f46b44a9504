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

#include <span>
#include <string>
#include <vector>

#include "o2v/data/dataset.hpp"
#include "o2v/metrics/metrics.hpp"
#include "o2v/plot/figure.hpp"

namespace o2v::plot {

// Latent-norm bands over time with event indices shaded, above strips of
// mean predictions and ground-truth frames.
Figure norm_overlay(const metrics::LatentNorms& norms, std::span<const int> events,
                    std::span<const data::Frame> prediction, std::span<const data::Frame> truth,
                    const std::string& title);

// Event vs non-event mean +- std bars for acceleration and velocity norms.
// Empty groups are drawn as a labelled gap.
Figure breakdown_bars(const metrics::NormBreakdown& acceleration,
                      const metrics::NormBreakdown& velocity, int window,
                      const std::string& title);

// One panel per latent dimension: s_d(t) and v_d(t) mean +- std over samples.
Figure latent_panel(std::span<const metrics::PosteriorSample> samples, std::span<const int> events,
                    const std::string& title);

// Mean +- std over test cases of a per-time metric.
Figure time_series(const std::vector<metrics::MeanStd>& series, const std::string& ylabel,
                   const std::string& title);

// Pixel intensities in [0, 1] quantized for display.
std::vector<std::uint8_t> to_gray(const data::Frame& f);

}  // namespace o2v::plot
