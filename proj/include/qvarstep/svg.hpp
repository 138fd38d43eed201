// Copyright 2026 The qvarstep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace qvarstep::svg {

struct Trace {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  double stroke_width = 1.0;
  std::string label;
};

struct Markers {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#d62728";
  std::string label;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Trace> traces;
  std::vector<Markers> stars;
  bool log_y = false;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// "Nice" tick step covering the range in roughly `count` intervals.
inline double tick_step(double range, int count) {
  const double raw = range / count;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double nice = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
  return nice * mag;
}

struct Frame {
  double left, top, width, height;
  double x_min, x_max, y_min, y_max;
  bool log_y;

  double map_x(double x) const { return left + (x - x_min) / (x_max - x_min) * width; }
  double map_y(double y) const {
    if (log_y) y = std::log10(std::max(y, std::numeric_limits<double>::min()));
    return top + height - (y - y_min) / (y_max - y_min) * height;
  }
};

// Keeps first, min, max and last sample of every pixel column so spikes
// survive decimation.
inline std::vector<std::size_t> decimate(const Trace& t, const Frame& f) {
  std::vector<std::size_t> keep;
  const std::size_t n = std::min(t.x.size(), t.y.size());
  if (n <= static_cast<std::size_t>(4 * f.width)) {
    for (std::size_t i = 0; i < n; ++i) keep.push_back(i);
    return keep;
  }
  std::size_t i = 0;
  while (i < n) {
    const long column = std::lround(f.map_x(t.x[i]));
    std::size_t first = i, lo = i, hi = i, last = i;
    while (i < n && std::lround(f.map_x(t.x[i])) == column) {
      if (t.y[i] < t.y[lo]) lo = i;
      if (t.y[i] > t.y[hi]) hi = i;
      last = i++;
    }
    std::size_t picks[4] = {first, std::min(lo, hi), std::max(lo, hi), last};
    for (std::size_t p : picks) {
      if (keep.empty() || keep.back() != p) keep.push_back(p);
    }
  }
  return keep;
}

inline std::string star(double cx, double cy, double r, const std::string& color) {
  std::string pts;
  for (int k = 0; k < 10; ++k) {
    const double rr = (k % 2 == 0) ? r : r * 0.45;
    const double a = -std::numbers::pi / 2.0 + k * std::numbers::pi / 5.0;
    if (k) pts += ' ';
    pts += num(cx + rr * std::cos(a)) + "," + num(cy + rr * std::sin(a));
  }
  return "<polygon points=\"" + pts + "\" fill=\"" + color + "\" stroke=\"none\"/>\n";
}

}  // namespace detail

/// Static SVG 1.1 document with the panels stacked vertically. Output is a
/// pure function of the input: all numbers are printed with fixed precision.
inline std::string render(std::span<const Panel> panels, int width = 960, int panel_height = 280) {
  const double margin_left = 80, margin_right = 20, margin_top = 30, margin_bottom = 45;
  const int height = static_cast<int>(panels.size()) * panel_height;
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + std::to_string(width) + "\" height=\"" +
         std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) + " " + std::to_string(height) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(width) + "\" height=\"" + std::to_string(height) +
         "\" fill=\"white\"/>\n";
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& panel = panels[p];
    detail::Frame f{margin_left, p * static_cast<double>(panel_height) + margin_top, width - margin_left - margin_right,
                    panel_height - margin_top - margin_bottom, 0, 1, 0, 1, panel.log_y};
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min, y_min = x_min, y_max = -x_min;
    const auto extend = [&](const std::vector<double>& xs, const std::vector<double>& ys) {
      for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
        double y = ys[i];
        if (panel.log_y) {
          if (!(y > 0.0)) continue;
          y = std::log10(y);
        }
        x_min = std::min(x_min, xs[i]);
        x_max = std::max(x_max, xs[i]);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    };
    for (const auto& t : panel.traces) extend(t.x, t.y);
    for (const auto& m : panel.stars) extend(m.x, m.y);
    if (!std::isfinite(x_min)) x_min = 0, x_max = 1, y_min = 0, y_max = 1;
    if (x_max <= x_min) x_max = x_min + 1.0;
    if (y_max <= y_min) y_max = y_min + 1.0;
    const double pad = 0.05 * (y_max - y_min);
    f.x_min = x_min;
    f.x_max = x_max;
    f.y_min = y_min - pad;
    f.y_max = y_max + pad;

    out += "<g id=\"panel" + std::to_string(p) + "\">\n";
    out += "<rect x=\"" + detail::num(f.left) + "\" y=\"" + detail::num(f.top) + "\" width=\"" + detail::num(f.width) +
           "\" height=\"" + detail::num(f.height) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    out += "<text x=\"" + detail::num(f.left + f.width / 2) + "\" y=\"" + detail::num(f.top - 10) +
           "\" text-anchor=\"middle\" font-size=\"13\">" + detail::escape(panel.title) + "</text>\n";

    const double xs = detail::tick_step(f.x_max - f.x_min, 8);
    for (double v = std::ceil(f.x_min / xs) * xs; v <= f.x_max + 1e-9 * xs; v += xs) {
      const double px = f.map_x(v);
      out += "<line x1=\"" + detail::num(px) + "\" y1=\"" + detail::num(f.top + f.height) + "\" x2=\"" + detail::num(px) +
             "\" y2=\"" + detail::num(f.top + f.height + 4) + "\" stroke=\"#444\"/>\n";
      out += "<text x=\"" + detail::num(px) + "\" y=\"" + detail::num(f.top + f.height + 16) +
             "\" text-anchor=\"middle\">" + detail::tick_label(v) + "</text>\n";
    }
    const double ys = detail::tick_step(f.y_max - f.y_min, 5);
    for (double v = std::ceil(f.y_min / ys) * ys; v <= f.y_max + 1e-9 * ys; v += ys) {
      const double py = f.top + f.height - (v - f.y_min) / (f.y_max - f.y_min) * f.height;
      out += "<line x1=\"" + detail::num(f.left - 4) + "\" y1=\"" + detail::num(py) + "\" x2=\"" + detail::num(f.left) +
             "\" y2=\"" + detail::num(py) + "\" stroke=\"#444\"/>\n";
      const std::string label = panel.log_y ? "1e" + detail::tick_label(v) : detail::tick_label(v);
      out += "<text x=\"" + detail::num(f.left - 6) + "\" y=\"" + detail::num(py + 4) + "\" text-anchor=\"end\">" + label +
             "</text>\n";
    }
    out += "<text x=\"" + detail::num(f.left + f.width / 2) + "\" y=\"" + detail::num(f.top + f.height + 34) +
           "\" text-anchor=\"middle\">" + detail::escape(panel.x_label) + "</text>\n";
    out += "<text x=\"16\" y=\"" + detail::num(f.top + f.height / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           detail::num(f.top + f.height / 2) + ")\">" + detail::escape(panel.y_label) + "</text>\n";

    for (const Trace& t : panel.traces) {
      std::string pts;
      for (std::size_t i : detail::decimate(t, f)) {
        if (panel.log_y && !(t.y[i] > 0.0)) continue;
        if (!pts.empty()) pts += ' ';
        pts += detail::num(f.map_x(t.x[i])) + "," + detail::num(f.map_y(t.y[i]));
      }
      out += "<polyline fill=\"none\" stroke=\"" + t.color + "\" stroke-width=\"" + detail::num(t.stroke_width) +
             "\" points=\"" + pts + "\"/>\n";
    }
    for (const Markers& m : panel.stars) {
      for (std::size_t i = 0; i < std::min(m.x.size(), m.y.size()); ++i) {
        out += detail::star(f.map_x(m.x[i]), f.map_y(m.y[i]), 6.0, m.color);
      }
    }
    // Legend
    double ly = f.top + 14;
    const auto legend = [&](const std::string& label, const std::string& color) {
      if (label.empty()) return;
      out += "<rect x=\"" + detail::num(f.left + f.width - 150) + "\" y=\"" + detail::num(ly - 8) +
             "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
      out += "<text x=\"" + detail::num(f.left + f.width - 135) + "\" y=\"" + detail::num(ly + 1) + "\">" +
             detail::escape(label) + "</text>\n";
      ly += 14;
    };
    for (const Trace& t : panel.traces) legend(t.label, t.color);
    for (const Markers& m : panel.stars) legend(m.label, m.color);
    out += "</g>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace qvarstep::svg
