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

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace o2v::plot {

struct Color {
  double r = 0.0, g = 0.0, b = 0.0;  // in [0, 1]
};

inline constexpr Color kBlack{0, 0, 0};
inline constexpr Color kWhite{1, 1, 1};

struct Point {
  double x = 0.0, y = 0.0;
};

enum class Anchor { kLeft, kCenter, kRight };

// Display list in points, origin top-left, y down. Rendered identically by
// the PNG and PDF backends.
class Figure {
 public:
  struct FillRect {
    double x, y, w, h;
    Color color;
  };
  struct Stroke {
    std::vector<Point> points;
    double width;
    Color color;
  };
  struct FillPolygon {
    std::vector<Point> points;
    Color color;
  };
  struct Text {
    double x, y;  // baseline anchor
    std::string text;
    double size;
    Anchor anchor;
    Color color;
  };
  struct GrayImage {
    double x, y, w, h;
    int cols, rows;
    std::vector<std::uint8_t> pixels;  // row-major
  };
  using Op = std::variant<FillRect, Stroke, FillPolygon, Text, GrayImage>;

  Figure(double width, double height);

  double width() const { return width_; }
  double height() const { return height_; }
  const std::vector<Op>& ops() const { return ops_; }

  void fill_rect(double x, double y, double w, double h, Color c);
  void stroke(std::vector<Point> pts, double width, Color c);
  void line(double x0, double y0, double x1, double y1, double width, Color c);
  void fill_polygon(std::vector<Point> pts, Color c);
  void text(double x, double y, std::string s, double size, Anchor a = Anchor::kLeft,
            Color c = kBlack);
  void image(double x, double y, double w, double h, int cols, int rows,
             std::vector<std::uint8_t> pixels);

 private:
  double width_, height_;
  std::vector<Op> ops_;
};

// Axis-aligned plotting area mapping data coordinates onto a figure rect.
class Axes {
 public:
  Axes(Figure& fig, double x, double y, double w, double h);

  void set_limits(double x0, double x1, double y0, double y1);
  // Limits padded around [lo, hi]; a flat range is widened.
  void autoscale_y(double lo, double hi);

  double px(double x) const;
  double py(double y) const;

  void frame(const std::string& xlabel, const std::string& ylabel, int xticks = 5,
             int yticks = 4, bool integer_x = false);
  void title(const std::string& s);
  void line(const std::vector<double>& xs, const std::vector<double>& ys, Color c,
            double width = 1.5);
  void band(const std::vector<double>& xs, const std::vector<double>& lo,
            const std::vector<double>& hi, Color c);
  void vspan(double x0, double x1, Color c);
  void markers(const std::vector<double>& xs, const std::vector<double>& ys, Color c,
               double size = 2.5);
  void bar(double x_center, double width, double value, Color c);
  void error_bar(double x, double lo, double hi, double cap = 4.0);
  void legend(const std::vector<std::pair<std::string, Color>>& entries);

  Figure& figure() { return *fig_; }
  double left() const { return x_; }
  double top() const { return y_; }
  double width() const { return w_; }
  double height() const { return h_; }

 private:
  Figure* fig_;
  double x_, y_, w_, h_;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
};

// Lighter tint of `c` (mix with white by `amount` in [0, 1]).
Color tint(Color c, double amount);

// Tick label text with the fewest digits that keep neighbours distinct.
std::string format_tick(double v, double step);

// 8-bit RGB PNG rasterization at `scale` pixels per point.
std::string render_png(const Figure& fig, double scale = 2.0);
// Single-page PDF; no timestamps or IDs, so output depends only on the figure.
std::string render_pdf(const Figure& fig);

// Writes `<stem>.png` and `<stem>.pdf`; returns both paths.
std::vector<std::filesystem::path> save(const Figure& fig, const std::filesystem::path& stem);

}  // namespace o2v::plot
