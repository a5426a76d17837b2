#include "ldg/plots.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>

#include "ldg/png_io.hpp"

namespace ldg {

namespace {

struct Rgb {
  double r, g, b;
};

constexpr Rgb kBlack{0.10, 0.10, 0.10};
constexpr Rgb kGrid{0.85, 0.85, 0.85};
const std::array<Rgb, 6> kPalette = {{{0.13, 0.36, 0.78},
                                      {0.84, 0.22, 0.16},
                                      {0.11, 0.58, 0.30},
                                      {0.90, 0.56, 0.11},
                                      {0.52, 0.23, 0.68},
                                      {0.35, 0.35, 0.35}}};

// 5x7 glyphs, one byte per row, low five bits used.
const std::map<char, std::array<std::uint8_t, 7>>& font() {
  static const std::map<char, std::array<std::uint8_t, 7>> table = {
      {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
      {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
      {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
      {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
      {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
      {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
      {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
      {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
      {'a', {0x00, 0x00, 0x0e, 0x01, 0x0f, 0x11, 0x0f}},
      {'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1e}},
      {'c', {0x00, 0x00, 0x0e, 0x10, 0x10, 0x11, 0x0e}},
      {'d', {0x01, 0x01, 0x0d, 0x13, 0x11, 0x11, 0x0f}},
      {'e', {0x00, 0x00, 0x0e, 0x11, 0x1f, 0x10, 0x0e}},
      {'f', {0x06, 0x09, 0x08, 0x1c, 0x08, 0x08, 0x08}},
      {'g', {0x00, 0x0f, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'i', {0x04, 0x00, 0x0c, 0x04, 0x04, 0x04, 0x0e}},
      {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0c}},
      {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
      {'l', {0x0c, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e}},
      {'m', {0x00, 0x00, 0x1a, 0x15, 0x15, 0x15, 0x15}},
      {'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
      {'o', {0x00, 0x00, 0x0e, 0x11, 0x11, 0x11, 0x0e}},
      {'p', {0x00, 0x00, 0x1e, 0x11, 0x1e, 0x10, 0x10}},
      {'q', {0x00, 0x00, 0x0d, 0x13, 0x0f, 0x01, 0x01}},
      {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
      {'s', {0x00, 0x00, 0x0f, 0x10, 0x0e, 0x01, 0x1e}},
      {'t', {0x08, 0x08, 0x1c, 0x08, 0x08, 0x09, 0x06}},
      {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0d}},
      {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0a, 0x04}},
      {'w', {0x00, 0x00, 0x11, 0x15, 0x15, 0x15, 0x0a}},
      {'x', {0x00, 0x00, 0x11, 0x0a, 0x04, 0x0a, 0x11}},
      {'y', {0x00, 0x00, 0x11, 0x11, 0x0f, 0x01, 0x0e}},
      {'z', {0x00, 0x00, 0x1f, 0x02, 0x04, 0x08, 0x1f}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
      {',', {0x00, 0x00, 0x00, 0x00, 0x04, 0x04, 0x08}},
      {'-', {0x00, 0x00, 0x00, 0x0e, 0x00, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1f}},
      {'+', {0x00, 0x04, 0x04, 0x1f, 0x04, 0x04, 0x00}},
      {'=', {0x00, 0x00, 0x1f, 0x00, 0x1f, 0x00, 0x00}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'/', {0x01, 0x02, 0x02, 0x04, 0x08, 0x08, 0x10}},
      {':', {0x00, 0x0c, 0x0c, 0x00, 0x0c, 0x0c, 0x00}},
      {'%', {0x19, 0x1a, 0x02, 0x04, 0x08, 0x0b, 0x13}},
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
  };
  return table;
}

void put_pixel(Image& img, int x, int y, const Rgb& c) {
  if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
  img.at(y, x, 0) = c.r;
  img.at(y, x, 1) = c.g;
  img.at(y, x, 2) = c.b;
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, const Rgb& c) {
  for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) put_pixel(img, x, y, c);
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, const Rgb& c, int thickness = 1) {
  int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    for (int ty = 0; ty < thickness; ++ty)
      for (int tx = 0; tx < thickness; ++tx) put_pixel(img, x0 + tx, y0 + ty, c);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void draw_text(Image& img, int x, int y, const std::string& text, const Rgb& c,
               int scale = 2) {
  int cx = x;
  for (char raw : text) {
    char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
    auto it = font().find(ch);
    if (it == font().end()) it = font().find(' ');
    for (int row = 0; row < 7; ++row)
      for (int col = 0; col < 5; ++col)
        if (it->second[row] & (1 << (4 - col)))
          fill_rect(img, cx + col * scale, y + row * scale, cx + col * scale + scale - 1,
                    y + row * scale + scale - 1, c);
    cx += 6 * scale;
  }
}

int text_width(const std::string& text, int scale = 2) {
  return static_cast<int>(text.size()) * 6 * scale;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct Frame {
  int left, right, top, bottom;  // plot area pixels
  double x_min, x_max, y_min, y_max;

  int px(double x) const {
    double t = (x - x_min) / (x_max - x_min);
    return left + static_cast<int>(t * (right - left));
  }
  int py(double y) const {
    double t = (y - y_min) / (y_max - y_min);
    return bottom - static_cast<int>(t * (bottom - top));
  }
};

void draw_frame(Image& img, const Frame& f, const std::string& title,
                const std::string& x_label, const std::string& y_label) {
  // horizontal grid + y ticks
  for (int k = 0; k <= 4; ++k) {
    double v = f.y_min + (f.y_max - f.y_min) * k / 4.0;
    int y = f.py(v);
    draw_line(img, f.left, y, f.right, y, kGrid);
    std::string label = short_num(v);
    draw_text(img, f.left - text_width(label, 1) - 6, y - 3, label, kBlack, 1);
  }
  draw_line(img, f.left, f.top, f.left, f.bottom, kBlack);
  draw_line(img, f.left, f.bottom, f.right, f.bottom, kBlack);
  if (!title.empty())
    draw_text(img, (f.left + f.right - text_width(title)) / 2, 6, title, kBlack);
  if (!x_label.empty())
    draw_text(img, (f.left + f.right - text_width(x_label, 1)) / 2, f.bottom + 22, x_label,
              kBlack, 1);
  if (!y_label.empty()) draw_text(img, 4, f.top - 14, y_label, kBlack, 1);
}

void pad_range(double& lo, double& hi) {
  if (hi <= lo) {
    hi = lo + 1.0;
    lo -= 1.0;
    return;
  }
  double pad = 0.08 * (hi - lo);
  lo -= pad;
  hi += pad;
}

}  // namespace

void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, int width, int height) {
  if (series.empty()) throw argument_error("line chart needs at least one series");
  Image img(height, width, 1.0);
  Frame f;
  f.left = 64;
  f.right = width - 150;
  f.top = 34;
  f.bottom = height - 44;
  f.x_min = f.y_min = std::numeric_limits<double>::max();
  f.x_max = f.y_max = std::numeric_limits<double>::lowest();
  for (const auto& s : series) {
    if (s.x.size() != s.y.size() || s.x.empty())
      throw argument_error("line chart series needs matching non-empty x/y");
    for (double v : s.x) {
      f.x_min = std::min(f.x_min, v);
      f.x_max = std::max(f.x_max, v);
    }
    for (double v : s.y) {
      f.y_min = std::min(f.y_min, v);
      f.y_max = std::max(f.y_max, v);
    }
  }
  if (f.x_max <= f.x_min) f.x_max = f.x_min + 1.0;
  pad_range(f.y_min, f.y_max);
  draw_frame(img, f, title, x_label, y_label);

  // x ticks at each distinct x of the first series
  for (double v : series[0].x) {
    int x = f.px(v);
    draw_line(img, x, f.bottom, x, f.bottom + 4, kBlack);
    std::string label = short_num(v);
    draw_text(img, x - text_width(label, 1) / 2, f.bottom + 8, label, kBlack, 1);
  }

  for (std::size_t s = 0; s < series.size(); ++s) {
    const Rgb& color = kPalette[s % kPalette.size()];
    const auto& ser = series[s];
    for (std::size_t i = 0; i + 1 < ser.x.size(); ++i)
      draw_line(img, f.px(ser.x[i]), f.py(ser.y[i]), f.px(ser.x[i + 1]), f.py(ser.y[i + 1]),
                color, 2);
    for (std::size_t i = 0; i < ser.x.size(); ++i)
      fill_rect(img, f.px(ser.x[i]) - 2, f.py(ser.y[i]) - 2, f.px(ser.x[i]) + 2,
                f.py(ser.y[i]) + 2, color);
    int ly = f.top + 18 * static_cast<int>(s);
    fill_rect(img, f.right + 10, ly, f.right + 26, ly + 8, color);
    draw_text(img, f.right + 32, ly, ser.label, kBlack, 1);
  }
  write_png(path, img);
}

void render_bar_chart(const std::string& path, const std::string& title,
                      const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values, int width, int height) {
  if (labels.size() != values.size() || values.empty())
    throw argument_error("bar chart needs matching non-empty labels/values");
  Image img(height, width, 1.0);
  Frame f;
  f.left = 64;
  f.right = width - 24;
  f.top = 34;
  f.bottom = height - 44;
  f.x_min = 0.0;
  f.x_max = 1.0;
  f.y_min = std::min(0.0, *std::min_element(values.begin(), values.end()));
  f.y_max = *std::max_element(values.begin(), values.end());
  pad_range(f.y_min, f.y_max);
  draw_frame(img, f, title, "", y_label);

  const int n = static_cast<int>(values.size());
  const int span = f.right - f.left;
  const int slot = span / n;
  const int bar = std::max(4, slot * 6 / 10);
  int base = f.py(std::max(0.0, f.y_min));
  for (int i = 0; i < n; ++i) {
    int cx = f.left + slot * i + slot / 2;
    int top = f.py(values[i]);
    const Rgb& color = kPalette[i % kPalette.size()];
    fill_rect(img, cx - bar / 2, std::min(top, base), cx + bar / 2, std::max(top, base), color);
    std::string v = short_num(values[i]);
    draw_text(img, cx - text_width(v, 1) / 2, std::min(top, base) - 12, v, kBlack, 1);
    draw_text(img, cx - text_width(labels[i], 1) / 2, f.bottom + 8, labels[i], kBlack, 1);
  }
  write_png(path, img);
}

void render_distance_weight_pair(const std::string& path, const DomainDistanceReport& report,
                                 int width, int height) {
  if (report.rows.empty()) throw argument_error("empty domain distance report");
  Image img(height, width, 1.0);

  auto panel = [&](int left, int right, const std::string& title,
                   const std::function<double(const DomainDistanceRow&)>& pick) {
    Frame f;
    f.left = left;
    f.right = right;
    f.top = 40;
    f.bottom = height - 44;
    f.x_min = 0.0;
    f.x_max = 1.0;
    f.y_min = 0.0;
    f.y_max = 0.0;
    for (const auto& r : report.rows) f.y_max = std::max(f.y_max, pick(r));
    pad_range(f.y_min, f.y_max);
    f.y_min = 0.0;
    draw_frame(img, f, title, "domain", "");
    const int n = static_cast<int>(report.rows.size());
    const int slot = (f.right - f.left) / n;
    const int bar = std::max(4, slot * 6 / 10);
    for (int i = 0; i < n; ++i) {
      int cx = f.left + slot * i + slot / 2;
      int top = f.py(pick(report.rows[i]));
      const Rgb& color = kPalette[i % kPalette.size()];
      fill_rect(img, cx - bar / 2, top, cx + bar / 2, f.bottom - 1, color);
      std::string v = short_num(pick(report.rows[i]));
      draw_text(img, cx - text_width(v, 1) / 2, top - 12, v, kBlack, 1);
      std::string lbl = std::to_string(report.rows[i].domain);
      draw_text(img, cx - text_width(lbl, 1) / 2, f.bottom + 8, lbl, kBlack, 1);
    }
  };

  int mid = width / 2;
  panel(64, mid - 30, "frechet distance", [](const DomainDistanceRow& r) { return r.frechet; });
  panel(mid + 50, width - 24, "mean prompt weight",
        [](const DomainDistanceRow& r) { return r.mean_weight; });
  if (report.spearman_correlation) {
    std::string s = "spearman = " + short_num(*report.spearman_correlation);
    draw_text(img, (width - text_width(s, 1)) / 2, height - 18, s, kBlack, 1);
  }
  write_png(path, img);
}

}  // namespace ldg
