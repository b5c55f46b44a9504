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


#include "o2v/plot/figure.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "o2v/common.hpp"
#include "o2v/io.hpp"

namespace o2v::plot {

Figure::Figure(double width, double height) : width_(width), height_(height) {
  if (!(width > 0 && height > 0)) throw ConfigError("figure size must be positive");
}

void Figure::fill_rect(double x, double y, double w, double h, Color c) {
  ops_.emplace_back(FillRect{x, y, w, h, c});
}

void Figure::stroke(std::vector<Point> pts, double width, Color c) {
  if (pts.size() >= 2) ops_.emplace_back(Stroke{std::move(pts), width, c});
}

void Figure::line(double x0, double y0, double x1, double y1, double width, Color c) {
  stroke({{x0, y0}, {x1, y1}}, width, c);
}

void Figure::fill_polygon(std::vector<Point> pts, Color c) {
  if (pts.size() >= 3) ops_.emplace_back(FillPolygon{std::move(pts), c});
}

void Figure::text(double x, double y, std::string s, double size, Anchor a, Color c) {
  ops_.emplace_back(Text{x, y, std::move(s), size, a, c});
}

void Figure::image(double x, double y, double w, double h, int cols, int rows,
                   std::vector<std::uint8_t> pixels) {
  if (cols <= 0 || rows <= 0 || pixels.size() != static_cast<std::size_t>(cols) * rows)
    throw DimensionError("figure image: pixel count does not match shape");
  ops_.emplace_back(GrayImage{x, y, w, h, cols, rows, std::move(pixels)});
}

Color tint(Color c, double amount) {
  return {c.r + (1 - c.r) * amount, c.g + (1 - c.g) * amount, c.b + (1 - c.b) * amount};
}

std::string format_tick(double v, double step) {
  int digits = 0;
  if (step > 0 && step < 1) digits = std::min(6, static_cast<int>(std::ceil(-std::log10(step) - 1e-9)));
  if (std::abs(v) < step * 1e-6) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// --- Axes ---------------------------------------------------------------

Axes::Axes(Figure& fig, double x, double y, double w, double h)
    : fig_(&fig), x_(x), y_(y), w_(w), h_(h) {}

void Axes::set_limits(double x0, double x1, double y0, double y1) {
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  x0_ = x0;
  x1_ = x1;
  y0_ = y0;
  y1_ = y1;
}

void Axes::autoscale_y(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) {
    const double pad = std::max(std::abs(hi) * 0.1, 0.5);
    lo -= pad;
    hi += pad;
  }
  const double pad = 0.06 * (hi - lo);
  set_limits(x0_, x1_, lo - pad, hi + pad);
}

double Axes::px(double x) const { return x_ + (x - x0_) / (x1_ - x0_) * w_; }
double Axes::py(double y) const { return y_ + h_ - (y - y0_) / (y1_ - y0_) * h_; }

namespace {

double nice_step(double span, int n) {
  const double raw = span / std::max(1, n);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) return m * mag;
  return 10 * mag;
}

constexpr Color kGrid{0.85, 0.85, 0.85};

}  // namespace

void Axes::frame(const std::string& xlabel, const std::string& ylabel, int xticks, int yticks,
                 bool integer_x) {
  auto& f = *fig_;
  const double fs = 8.0;
  double xs = integer_x ? std::max(1.0, std::ceil((x1_ - x0_) / std::max(1, xticks)))
                        : nice_step(x1_ - x0_, xticks);
  for (double v = std::ceil(x0_ / xs - 1e-9) * xs; v <= x1_ + 1e-9 * xs; v += xs) {
    f.line(px(v), y_ + h_, px(v), y_ + h_ + 3, 0.6, kBlack);
    f.text(px(v), y_ + h_ + 12, format_tick(v, xs), fs, Anchor::kCenter);
  }
  const double ys = nice_step(y1_ - y0_, yticks);
  for (double v = std::ceil(y0_ / ys - 1e-9) * ys; v <= y1_ + 1e-9 * ys; v += ys) {
    f.line(x_, py(v), x_ + w_, py(v), 0.4, kGrid);
    f.line(x_ - 3, py(v), x_, py(v), 0.6, kBlack);
    f.text(x_ - 5, py(v) + 3, format_tick(v, ys), fs, Anchor::kRight);
  }
  f.stroke({{x_, y_}, {x_ + w_, y_}, {x_ + w_, y_ + h_}, {x_, y_ + h_}, {x_, y_}}, 0.8, kBlack);
  if (!xlabel.empty()) f.text(x_ + w_ / 2, y_ + h_ + 25, xlabel, 9, Anchor::kCenter);
  if (!ylabel.empty()) f.text(x_, y_ - 5, ylabel, 9, Anchor::kLeft);
}

void Axes::title(const std::string& s) { fig_->text(x_ + w_ / 2, y_ - 5, s, 10, Anchor::kCenter); }

void Axes::line(const std::vector<double>& xs, const std::vector<double>& ys, Color c,
                double width) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i)
    if (std::isfinite(ys[i])) pts.push_back({px(xs[i]), py(std::clamp(ys[i], y0_, y1_))});
  fig_->stroke(std::move(pts), width, c);
}

void Axes::band(const std::vector<double>& xs, const std::vector<double>& lo,
                const std::vector<double>& hi, Color c) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({px(xs[i]), py(std::clamp(hi[i], y0_, y1_))});
  for (std::size_t i = xs.size(); i-- > 0;) pts.push_back({px(xs[i]), py(std::clamp(lo[i], y0_, y1_))});
  fig_->fill_polygon(std::move(pts), c);
}

void Axes::vspan(double x0, double x1, Color c) {
  const double a = std::max(px(x0), x_), b = std::min(px(x1), x_ + w_);
  if (b > a) fig_->fill_rect(a, y_, b - a, h_, c);
}

void Axes::markers(const std::vector<double>& xs, const std::vector<double>& ys, Color c,
                   double size) {
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!std::isfinite(ys[i])) continue;
    const double x = px(xs[i]), y = py(ys[i]);
    fig_->fill_rect(x - size / 2, y - size / 2, size, size, c);
  }
}

void Axes::bar(double x_center, double width, double value, Color c) {
  const double base = py(std::clamp(0.0, y0_, y1_));
  const double top = py(std::clamp(value, y0_, y1_));
  const double l = px(x_center - width / 2), r = px(x_center + width / 2);
  fig_->fill_rect(l, std::min(base, top), r - l, std::abs(base - top), c);
}

void Axes::error_bar(double x, double lo, double hi, double cap) {
  const double X = px(x), a = py(std::clamp(lo, y0_, y1_)), b = py(std::clamp(hi, y0_, y1_));
  fig_->line(X, a, X, b, 1.0, kBlack);
  fig_->line(X - cap, a, X + cap, a, 1.0, kBlack);
  fig_->line(X - cap, b, X + cap, b, 1.0, kBlack);
}

void Axes::legend(const std::vector<std::pair<std::string, Color>>& entries) {
  double y = y_ + 10;
  for (const auto& [label, c] : entries) {
    fig_->line(x_ + w_ - 70, y - 3, x_ + w_ - 55, y - 3, 2.0, c);
    fig_->text(x_ + w_ - 50, y, label, 8);
    y += 11;
  }
}

// --- PNG backend --------------------------------------------------------

namespace {

cv::Scalar rgb(Color c) {
  auto q = [](double v) { return std::clamp(std::round(v * 255.0), 0.0, 255.0); };
  return {q(c.r), q(c.g), q(c.b)};
}

constexpr int kShift = 4;
constexpr double kSub = 1 << kShift;

cv::Point sub(double x, double y, double s) {
  return {static_cast<int>(std::lround(x * s * kSub)), static_cast<int>(std::lround(y * s * kSub))};
}

void draw_png(cv::Mat& img, const Figure::Op& op, double s) {
  if (const auto* r = std::get_if<Figure::FillRect>(&op)) {
    const int x0 = static_cast<int>(std::lround(r->x * s)), y0 = static_cast<int>(std::lround(r->y * s));
    const int x1 = static_cast<int>(std::lround((r->x + r->w) * s));
    const int y1 = static_cast<int>(std::lround((r->y + r->h) * s));
    if (x1 > x0 && y1 > y0) cv::rectangle(img, {x0, y0}, {x1 - 1, y1 - 1}, rgb(r->color), cv::FILLED);
  } else if (const auto* st = std::get_if<Figure::Stroke>(&op)) {
    std::vector<cv::Point> pts;
    for (const auto& p : st->points) pts.push_back(sub(p.x, p.y, s));
    const int th = std::max(1, static_cast<int>(std::lround(st->width * s)));
    cv::polylines(img, pts, false, rgb(st->color), th, cv::LINE_AA, kShift);
  } else if (const auto* fp = std::get_if<Figure::FillPolygon>(&op)) {
    std::vector<cv::Point> pts;
    for (const auto& p : fp->points) pts.push_back(sub(p.x, p.y, s));
    std::vector<std::vector<cv::Point>> polys{pts};
    cv::fillPoly(img, polys, rgb(fp->color), cv::LINE_AA, kShift);
  } else if (const auto* t = std::get_if<Figure::Text>(&op)) {
    const int font = cv::FONT_HERSHEY_SIMPLEX;
    const double scale = t->size * s * 0.72 / 22.0;
    const int th = std::max(1, static_cast<int>(std::lround(t->size * s / 12.0)));
    int baseline = 0;
    const cv::Size sz = cv::getTextSize(t->text, font, scale, th, &baseline);
    double x = t->x * s;
    if (t->anchor == Anchor::kCenter) x -= sz.width / 2.0;
    if (t->anchor == Anchor::kRight) x -= sz.width;
    cv::putText(img, t->text, {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(t->y * s))},
                font, scale, rgb(t->color), th, cv::LINE_AA);
  } else if (const auto* im = std::get_if<Figure::GrayImage>(&op)) {
    const int x0 = static_cast<int>(std::lround(im->x * s)), y0 = static_cast<int>(std::lround(im->y * s));
    const int w = static_cast<int>(std::lround(im->w * s)), h = static_cast<int>(std::lround(im->h * s));
    if (w <= 0 || h <= 0) return;
    cv::Mat src(im->rows, im->cols, CV_8UC1, const_cast<std::uint8_t*>(im->pixels.data()));
    cv::Mat scaled, color;
    cv::resize(src, scaled, {w, h}, 0, 0, cv::INTER_NEAREST);
    cv::cvtColor(scaled, color, cv::COLOR_GRAY2RGB);
    const cv::Rect dst = cv::Rect(x0, y0, w, h) & cv::Rect(0, 0, img.cols, img.rows);
    if (dst.area() > 0) color(cv::Rect(dst.x - x0, dst.y - y0, dst.width, dst.height)).copyTo(img(dst));
  }
}

void png_append(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), len);
}

std::string encode_png(const cv::Mat& img) {
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: encoding failed");
  }
  png_set_write_fn(png, &out, png_append, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.cols), static_cast<png_uint_32>(img.rows), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 9);
  png_write_info(png, info);
  for (int r = 0; r < img.rows; ++r) png_write_row(png, const_cast<png_bytep>(img.ptr<png_byte>(r)));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

}  // namespace

std::string render_png(const Figure& fig, double scale) {
  if (!(scale > 0)) throw ConfigError("png scale must be positive");
  const int w = static_cast<int>(std::lround(fig.width() * scale));
  const int h = static_cast<int>(std::lround(fig.height() * scale));
  cv::Mat img(h, w, CV_8UC3, cv::Scalar(255, 255, 255));
  for (const auto& op : fig.ops()) draw_png(img, op, scale);
  return encode_png(img);
}

// --- PDF backend --------------------------------------------------------

namespace {

// Helvetica advance widths (1/1000 em) for ASCII 32..126.
constexpr std::array<int, 95> kHelvetica{
    278, 278, 355, 556, 556, 889, 667, 191, 333, 333, 389, 584, 278, 333, 278, 278,
    556, 556, 556, 556, 556, 556, 556, 556, 556, 556, 278, 278, 584, 584, 584, 556,
    1015, 667, 667, 722, 722, 667, 611, 778, 722, 278, 500, 667, 556, 833, 722, 778,
    667, 778, 722, 667, 611, 722, 667, 944, 667, 667, 611, 278, 278, 278, 469, 556,
    333, 556, 556, 500, 556, 556, 278, 556, 556, 222, 222, 500, 222, 833, 556, 556,
    556, 556, 333, 500, 278, 556, 500, 722, 500, 500, 500, 334, 260, 334, 584};

double text_width_pt(const std::string& s, double size) {
  double w = 0;
  for (unsigned char ch : s) w += (ch >= 32 && ch <= 126) ? kHelvetica[ch - 32] : 556;
  return w * size / 1000.0;
}

std::string num(double v) {
  if (std::abs(v) < 5e-4) v = 0.0;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string pdf_string(const std::string& s) {
  std::string out = "(";
  for (char c : s) {
    if (c == '(' || c == ')' || c == '\\') out += '\\';
    out += (static_cast<unsigned char>(c) < 32 || static_cast<unsigned char>(c) > 126) ? '?' : c;
  }
  return out + ")";
}

std::string color_op(Color c, const char* op) {
  return num(c.r) + " " + num(c.g) + " " + num(c.b) + " " + op + "\n";
}

}  // namespace

std::string render_pdf(const Figure& fig) {
  const double H = fig.height();
  std::string content = "1 j 1 J\n";
  std::vector<const Figure::GrayImage*> images;
  for (const auto& op : fig.ops()) {
    if (const auto* r = std::get_if<Figure::FillRect>(&op)) {
      content += color_op(r->color, "rg");
      content += num(r->x) + " " + num(H - r->y - r->h) + " " + num(r->w) + " " + num(r->h) + " re f\n";
    } else if (const auto* st = std::get_if<Figure::Stroke>(&op)) {
      content += color_op(st->color, "RG") + num(st->width) + " w\n";
      for (std::size_t i = 0; i < st->points.size(); ++i)
        content += num(st->points[i].x) + " " + num(H - st->points[i].y) + (i ? " l\n" : " m\n");
      content += "S\n";
    } else if (const auto* fp = std::get_if<Figure::FillPolygon>(&op)) {
      content += color_op(fp->color, "rg");
      for (std::size_t i = 0; i < fp->points.size(); ++i)
        content += num(fp->points[i].x) + " " + num(H - fp->points[i].y) + (i ? " l\n" : " m\n");
      content += "h f\n";
    } else if (const auto* t = std::get_if<Figure::Text>(&op)) {
      double x = t->x;
      const double w = text_width_pt(t->text, t->size);
      if (t->anchor == Anchor::kCenter) x -= w / 2;
      if (t->anchor == Anchor::kRight) x -= w;
      content += color_op(t->color, "rg") + "BT /F1 " + num(t->size) + " Tf " + num(x) + " " +
                 num(H - t->y) + " Td " + pdf_string(t->text) + " Tj ET\n";
    } else if (const auto* im = std::get_if<Figure::GrayImage>(&op)) {
      images.push_back(im);
      content += "q " + num(im->w) + " 0 0 " + num(im->h) + " " + num(im->x) + " " +
                 num(H - im->y - im->h) + " cm /Im" + std::to_string(images.size()) + " Do Q\n";
    }
  }

  std::vector<std::string> objs;
  objs.push_back("<< /Type /Catalog /Pages 2 0 R >>");
  objs.push_back("<< /Type /Pages /Kids [3 0 R] /Count 1 >>");
  std::string xobjects;
  for (std::size_t i = 0; i < images.size(); ++i)
    xobjects += "/Im" + std::to_string(i + 1) + " " + std::to_string(6 + i) + " 0 R ";
  objs.push_back("<< /Type /Page /Parent 2 0 R /MediaBox [0 0 " + num(fig.width()) + " " + num(H) +
                 "] /Contents 4 0 R /Resources << /Font << /F1 5 0 R >> /XObject << " + xobjects +
                 ">> >> >>");
  const std::string zc = io::deflate(content);
  objs.push_back("<< /Length " + std::to_string(zc.size()) + " /Filter /FlateDecode >>\nstream\n" +
                 zc + "\nendstream");
  objs.push_back("<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica /Encoding /WinAnsiEncoding >>");
  for (const auto* im : images) {
    const std::string zi = io::deflate(std::string_view(
        reinterpret_cast<const char*>(im->pixels.data()), im->pixels.size()));
    objs.push_back("<< /Type /XObject /Subtype /Image /Width " + std::to_string(im->cols) +
                   " /Height " + std::to_string(im->rows) +
                   " /ColorSpace /DeviceGray /BitsPerComponent 8 /Filter /FlateDecode /Length " +
                   std::to_string(zi.size()) + " >>\nstream\n" + zi + "\nendstream");
  }

  std::string out = "%PDF-1.4\n%\xE2\xE3\xCF\xD3\n";
  std::vector<std::size_t> offsets;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    offsets.push_back(out.size());
    out += std::to_string(i + 1) + " 0 obj\n" + objs[i] + "\nendobj\n";
  }
  const std::size_t xref = out.size();
  out += "xref\n0 " + std::to_string(objs.size() + 1) + "\n0000000000 65535 f \n";
  for (auto off : offsets) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%010zu 00000 n \n", off);
    out += buf;
  }
  out += "trailer\n<< /Size " + std::to_string(objs.size() + 1) + " /Root 1 0 R >>\nstartxref\n" +
         std::to_string(xref) + "\n%%EOF\n";
  return out;
}

std::vector<std::filesystem::path> save(const Figure& fig, const std::filesystem::path& stem) {
  auto png = stem, pdf = stem;
  png += ".png";
  pdf += ".pdf";
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  io::write_file_atomic(png, render_png(fig));
  io::write_file_atomic(pdf, render_pdf(fig));
  return {png, pdf};
}

}  // namespace o2v::plot
