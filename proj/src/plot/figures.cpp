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


#include "o2v/plot/figures.hpp"

#include <algorithm>
#include <cmath>

#include "o2v/common.hpp"

namespace o2v::plot {

namespace {

constexpr Color kAcc{0.80, 0.15, 0.15};
constexpr Color kVel{0.12, 0.35, 0.75};
constexpr Color kEvent{1.0, 0.86, 0.55};
constexpr Color kNeutral{0.45, 0.45, 0.45};

std::vector<double> index_axis(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i);
  return t;
}

void norm_axes(Axes& ax, const std::vector<metrics::MeanStd>& s, std::span<const int> events,
               Color c, const std::string& label) {
  const auto t = index_axis(s.size());
  std::vector<double> m, lo, hi;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& x : s) {
    m.push_back(x.mean);
    lo.push_back(x.mean - x.std);
    hi.push_back(x.mean + x.std);
    ymax = std::max(ymax, x.mean + x.std);
  }
  ax.set_limits(-0.5, static_cast<double>(s.size()) - 0.5, 0, 1);
  ax.autoscale_y(ymin, ymax);
  for (int e : events) ax.vspan(e - 0.5, e + 0.5, kEvent);
  ax.band(t, lo, hi, tint(c, 0.75));
  ax.line(t, m, c);
  ax.markers(t, m, c);
  ax.frame("", label, static_cast<int>(s.size()), 4, true);
}

void strip(Figure& f, std::span<const data::Frame> frames, double x, double y, double cell,
           const std::string& label) {
  f.text(x - 6, y + cell / 2 + 3, label, 8, Anchor::kRight);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& fr = frames[t];
    f.image(x + t * (cell + 2), y, cell, cell, fr.resolution, fr.resolution, to_gray(fr));
  }
}

}  // namespace

std::vector<std::uint8_t> to_gray(const data::Frame& f) {
  std::vector<std::uint8_t> out(f.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(f.pixels[i], 0.0, 1.0) * 255.0));
  return out;
}

Figure norm_overlay(const metrics::LatentNorms& norms, std::span<const int> events,
                    std::span<const data::Frame> prediction, std::span<const data::Frame> truth,
                    const std::string& title) {
  const std::size_t T = norms.acceleration.size();
  const double left = 70, right = 20, cell = 40;
  const double width = std::max(480.0, left + right + T * (cell + 2));
  const double plot_w = width - left - right;
  Figure f(width, 470);
  f.text(width / 2, 18, title, 11, Anchor::kCenter);
  Axes acc(f, left, 40, plot_w, 110);
  norm_axes(acc, norms.acceleration, events, kAcc, "|f_W(s,v)|");
  Axes vel(f, left, 180, plot_w, 110);
  norm_axes(vel, norms.velocity, events, kVel, "|v|");
  f.text(left + plot_w / 2, 318, "time step", 9, Anchor::kCenter);
  const double sx = left + (plot_w - T * (cell + 2)) / 2;
  strip(f, prediction, sx, 335, cell, "prediction");
  strip(f, truth, sx, 335 + cell + 8, cell, "truth");
  for (int e : events)
    if (e >= 0 && static_cast<std::size_t>(e) < T)
      f.fill_rect(sx + e * (cell + 2), 335 + 2 * cell + 12, cell, 4, kAcc);
  return f;
}

Figure breakdown_bars(const metrics::NormBreakdown& acceleration,
                      const metrics::NormBreakdown& velocity, int window,
                      const std::string& title) {
  Figure f(520, 300);
  f.text(260, 18, title, 11, Anchor::kCenter);
  auto panel = [&](double x, const metrics::NormBreakdown& b, Color c, const std::string& label) {
    Axes ax(f, x, 50, 180, 190);
    double hi = 0.0;
    for (const auto* g : {&b.event, &b.non_event})
      if (!g->empty()) hi = std::max(hi, g->stats.mean + g->stats.std);
    ax.set_limits(-0.6, 1.6, 0, 1);
    ax.autoscale_y(0.0, hi);
    const std::pair<const metrics::GroupStats*, std::string> groups[] = {
        {&b.event, "event"}, {&b.non_event, "non-event"}};
    for (int i = 0; i < 2; ++i) {
      const auto& [g, name] = groups[i];
      const std::string tag = name + " (n=" + std::to_string(g->count) + ")";
      f.text(ax.px(i), 50 + 190 + 14, tag, 8, Anchor::kCenter);
      if (g->empty()) {
        f.text(ax.px(i), ax.py(0) - 10, "empty", 8, Anchor::kCenter, kNeutral);
        continue;
      }
      ax.bar(i, 0.6, g->stats.mean, i == 0 ? c : tint(c, 0.5));
      ax.error_bar(i, g->stats.mean - g->stats.std, g->stats.mean + g->stats.std);
    }
    ax.frame("", label, 2, 4);
  };
  panel(70, acceleration, kAcc, "|f_W(s,v)|");
  panel(320, velocity, kVel, "|v|");
  f.text(260, 288, "event window " + std::to_string(window), 8, Anchor::kCenter, kNeutral);
  return f;
}

Figure latent_panel(std::span<const metrics::PosteriorSample> samples, std::span<const int> events,
                    const std::string& title) {
  if (samples.empty()) throw DimensionError("latent_panel: no samples");
  const auto& first = samples.front().trajectory;
  const std::size_t T = first.states.size();
  const std::size_t a = first.states.front().s.size();
  const double pw = 200, ph = 100, gapx = 60, gapy = 45, left = 60, top = 45;
  const std::size_t cols = std::min<std::size_t>(a, 4);
  const std::size_t rows_per = (a + cols - 1) / cols;
  Figure f(left + cols * (pw + gapx), top + 2 * rows_per * (ph + gapy) + 10);
  f.text(f.width() / 2, 18, title, 11, Anchor::kCenter);
  const auto t = index_axis(T);
  for (int kind = 0; kind < 2; ++kind) {
    for (std::size_t d = 0; d < a; ++d) {
      std::vector<double> m(T), lo(T), hi(T), col(samples.size());
      double ymin = 1e300, ymax = -1e300;
      for (std::size_t i = 0; i < T; ++i) {
        for (std::size_t l = 0; l < samples.size(); ++l) {
          const auto& st = samples[l].trajectory.states[i];
          col[l] = kind == 0 ? st.s[d] : st.v[d];
        }
        const auto ms = metrics::mean_std(col);
        m[i] = ms.mean;
        lo[i] = ms.mean - ms.std;
        hi[i] = ms.mean + ms.std;
        ymin = std::min(ymin, lo[i]);
        ymax = std::max(ymax, hi[i]);
      }
      const std::size_t r = kind * rows_per + d / cols, c = d % cols;
      Axes ax(f, left + c * (pw + gapx), top + r * (ph + gapy), pw, ph);
      ax.set_limits(-0.5, T - 0.5, 0, 1);
      ax.autoscale_y(ymin, ymax);
      for (int e : events) ax.vspan(e - 0.5, e + 0.5, kEvent);
      const Color color = kind == 0 ? kNeutral : kVel;
      ax.band(t, lo, hi, tint(color, 0.75));
      ax.line(t, m, color);
      ax.frame("", (kind == 0 ? "s_" : "v_") + std::to_string(d), static_cast<int>(T), 3, true);
    }
  }
  return f;
}

Figure time_series(const std::vector<metrics::MeanStd>& series, const std::string& ylabel,
                   const std::string& title) {
  Figure f(480, 300);
  f.text(240, 18, title, 11, Anchor::kCenter);
  Axes ax(f, 70, 45, 380, 200);
  const auto t = index_axis(series.size());
  std::vector<double> m, lo, hi;
  double ymin = 1e300, ymax = -1e300;
  for (const auto& x : series) {
    m.push_back(x.mean);
    lo.push_back(x.mean - x.std);
    hi.push_back(x.mean + x.std);
    if (std::isfinite(x.mean)) {
      ymin = std::min(ymin, x.mean - x.std);
      ymax = std::max(ymax, x.mean + x.std);
    }
  }
  ax.set_limits(-0.5, series.size() - 0.5, 0, 1);
  ax.autoscale_y(ymin, ymax);
  ax.band(t, lo, hi, tint(kVel, 0.75));
  ax.line(t, m, kVel);
  ax.markers(t, m, kVel);
  ax.frame("time step", ylabel, static_cast<int>(series.size()), 4, true);
  return f;
}

}  // namespace o2v::plot
