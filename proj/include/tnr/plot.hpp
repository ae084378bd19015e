// Minimal line-chart rasterizer writing PNG: auto-scaled axes, tick labels
// in a 3x5 bitmap font, coloured polylines.

#ifndef TNR_PLOT_HPP_
#define TNR_PLOT_HPP_

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "tnr/image.hpp"

namespace tnr {

struct Color {
  std::uint8_t r, g, b;
};

inline Color palette(int i) {
  static const Color kColors[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
                                  {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
                                  {188, 189, 34},  {23, 190, 207}};
  return kColors[((i % 10) + 10) % 10];
}

namespace detail {

// 3x5 glyphs, row-major, top row in the high bits.
inline std::uint16_t glyph(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case '0': return 0b111101101101111;
    case '1': return 0b010110010010111;
    case '2': return 0b111001111100111;
    case '3': return 0b111001111001111;
    case '4': return 0b101101111001001;
    case '5': return 0b111100111001111;
    case '6': return 0b111100111101111;
    case '7': return 0b111001010010010;
    case '8': return 0b111101111101111;
    case '9': return 0b111101111001111;
    case 'A': return 0b010101111101101;
    case 'B': return 0b110101110101110;
    case 'C': return 0b011100100100011;
    case 'D': return 0b110101101101110;
    case 'E': return 0b111100110100111;
    case 'F': return 0b111100110100100;
    case 'G': return 0b011100101101011;
    case 'H': return 0b101101111101101;
    case 'I': return 0b111010010010111;
    case 'J': return 0b001001001101010;
    case 'K': return 0b101101110101101;
    case 'L': return 0b100100100100111;
    case 'M': return 0b101111111101101;
    case 'N': return 0b110101101101101;
    case 'O': return 0b010101101101010;
    case 'P': return 0b110101110100100;
    case 'Q': return 0b010101101110011;
    case 'R': return 0b110101110101101;
    case 'S': return 0b011100010001110;
    case 'T': return 0b111010010010010;
    case 'U': return 0b101101101101111;
    case 'V': return 0b101101101101010;
    case 'W': return 0b101101111111101;
    case 'X': return 0b101101010101101;
    case 'Y': return 0b101101010010010;
    case 'Z': return 0b111001010100111;
    case '.': return 0b000000000000010;
    case ',': return 0b000000000010100;
    case '-': return 0b000000111000000;
    case '+': return 0b000010111010000;
    case ':': return 0b000010000010000;
    case '/': return 0b001001010100100;
    case '(': return 0b010100100100010;
    case ')': return 0b010001001001010;
    case '[': return 0b110100100100110;
    case ']': return 0b011001001001011;
    case '=': return 0b000111000111000;
    case '_': return 0b000000000000111;
    default: return 0;
  }
}

}  // namespace detail

class Canvas {
 public:
  Canvas(int w, int h) : img_(w, h) { std::fill(img_.rgb.begin(), img_.rgb.end(), 255); }

  const Image& image() const { return img_; }
  int width() const { return img_.width; }
  int height() const { return img_.height; }

  void set(int x, int y, Color c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    auto* p = img_.pixel(x, y);
    p[0] = c.r, p[1] = c.g, p[2] = c.b;
  }

  void fill_rect(int x0, int y0, int x1, int y1, Color c) {
    for (int y = std::max(0, y0); y < std::min(img_.height, y1); ++y)
      for (int x = std::max(0, x0); x < std::min(img_.width, x1); ++x) set(x, y, c);
  }

  void line(double x0, double y0, double x1, double y1, Color c, int width = 1) {
    const double len = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int steps = std::max(1, int(std::ceil(len)));
    for (int i = 0; i <= steps; ++i) {
      const double t = double(i) / steps;
      const int x = int(std::lround(x0 + t * (x1 - x0)));
      const int y = int(std::lround(y0 + t * (y1 - y0)));
      for (int dy = 0; dy < width; ++dy)
        for (int dx = 0; dx < width; ++dx) set(x + dx - width / 2, y + dy - width / 2, c);
    }
  }

  static int text_width(const std::string& s, int scale = 2) { return int(s.size()) * 4 * scale; }

  void text(int x, int y, const std::string& s, Color c = {0, 0, 0}, int scale = 2) {
    for (char ch : s) {
      const auto g = detail::glyph(ch);
      for (int r = 0; r < 5; ++r)
        for (int k = 0; k < 3; ++k)
          if (g & (1u << (14 - (r * 3 + k)))) fill_rect(x + k * scale, y + r * scale, x + (k + 1) * scale, y + (r + 1) * scale, c);
      x += 4 * scale;
    }
  }

  void save(const std::string& path) const { write_png(img_, path); }

 private:
  Image img_;
};

inline std::string format_tick(double v) {
  char buf[32];
  if (v == 0.0) return "0";
  const double a = std::abs(v);
  if (a >= 1e4 || a < 1e-3)
    std::snprintf(buf, sizeof buf, "%.1e", v);
  else
    std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Roughly `n` round tick positions covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi, int n = 5) {
  std::vector<double> out;
  if (!(hi > lo)) return {lo};
  const double raw = (hi - lo) / n;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

struct Series {
  std::string label;
  std::vector<double> x, y;
  int color = 0;
  int width = 1;
};

struct Chart {
  std::string title, xlabel, ylabel;
  std::vector<Series> series;
  bool equal_aspect = false;
  int width = 800, height = 560;

  Chart(std::string t, std::string xl, std::string yl)
      : title(std::move(t)), xlabel(std::move(xl)), ylabel(std::move(yl)) {}

  Canvas render() const {
    Canvas cv(width, height);
    const int left = 90, right = 20, top = 40, bottom = 60;
    const int pw = width - left - right, ph = height - top - bottom;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        x0 = std::min(x0, s.x[i]), x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]), y1 = std::max(y1, s.y[i]);
      }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    auto pad = [](double& lo, double& hi) {
      if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
      const double m = 0.04 * (hi - lo);
      lo -= m, hi += m;
    };
    pad(x0, x1);
    pad(y0, y1);
    if (equal_aspect) {
      const double sx = (x1 - x0) / pw, sy = (y1 - y0) / ph;
      if (sx > sy) {
        const double c = 0.5 * (y0 + y1), h = 0.5 * sx * ph;
        y0 = c - h, y1 = c + h;
      } else {
        const double c = 0.5 * (x0 + x1), h = 0.5 * sy * pw;
        x0 = c - h, x1 = c + h;
      }
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    const Color grid{225, 225, 225}, axis{0, 0, 0};
    for (double t : nice_ticks(x0, x1)) {
      cv.line(px(t), top, px(t), top + ph, grid);
      const std::string s = format_tick(t);
      cv.text(int(px(t)) - Canvas::text_width(s) / 2, top + ph + 8, s);
    }
    for (double t : nice_ticks(y0, y1)) {
      cv.line(left, py(t), left + pw, py(t), grid);
      const std::string s = format_tick(t);
      cv.text(left - 8 - Canvas::text_width(s), int(py(t)) - 5, s);
    }
    cv.line(left, top, left, top + ph, axis);
    cv.line(left, top + ph, left + pw, top + ph, axis);
    cv.line(left, top, left + pw, top, axis);
    cv.line(left + pw, top, left + pw, top + ph, axis);

    for (const auto& s : series) {
      const Color c = palette(s.color);
      for (std::size_t i = 1; i < std::min(s.x.size(), s.y.size()); ++i)
        cv.line(px(s.x[i - 1]), py(s.y[i - 1]), px(s.x[i]), py(s.y[i]), c, s.width);
      if (s.x.size() == 1) cv.fill_rect(int(px(s.x[0])) - 2, int(py(s.y[0])) - 2, int(px(s.x[0])) + 3, int(py(s.y[0])) + 3, c);
    }

    cv.text(left, 12, title, axis, 3);
    cv.text(left + pw / 2 - Canvas::text_width(xlabel) / 2, height - 24, xlabel);
    cv.text(8, top - 20, ylabel);
    int ly = top + 8;
    for (const auto& s : series) {
      if (s.label.empty()) continue;
      const int lx = left + pw - Canvas::text_width(s.label) - 30;
      cv.fill_rect(lx, ly + 3, lx + 16, ly + 6, palette(s.color));
      cv.text(lx + 20, ly, s.label);
      ly += 14;
      if (ly > top + ph - 14) break;
    }
    return cv;
  }

  void save(const std::string& path) const { render().save(path); }
};

}  // namespace tnr

#endif  // TNR_PLOT_HPP_
