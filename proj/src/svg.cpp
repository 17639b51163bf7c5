// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgctrl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace cfgctrl::svg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
constexpr int kMarginLeft = 64;
constexpr int kMarginRight = 16;
constexpr int kMarginTop = 32;
constexpr int kMarginBottom = 48;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }

  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(0.5, std::abs(hi) * 0.1);
      lo -= pad;
      hi += pad;
    }
  }
};

void render_panel(std::string& out, const Panel& panel, int ox, int width, int height) {
  Range xr;
  Range yr;
  for (const auto& s : panel.series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
    }
  }
  xr.finish();
  yr.finish();
  const auto xticks = nice_ticks(xr.lo, xr.hi);
  const auto yticks = nice_ticks(yr.lo, yr.hi);
  xr.lo = std::min(xr.lo, xticks.front());
  xr.hi = std::max(xr.hi, xticks.back());
  yr.lo = std::min(yr.lo, yticks.front());
  yr.hi = std::max(yr.hi, yticks.back());

  const double left = ox + kMarginLeft;
  const double right = ox + width - kMarginRight;
  const double top = kMarginTop;
  const double bottom = height - kMarginBottom;
  const auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * (right - left); };
  const auto py = [&](double y) { return bottom - (y - yr.lo) / (yr.hi - yr.lo) * (bottom - top); };

  out += "<g>\n";
  out += "<text x=\"" + fmt((left + right) / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape_xml(panel.title) + "</text>\n";
  out += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(right - left) + "\" height=\"" +
         fmt(bottom - top) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (const double t : xticks) {
    const double x = px(t);
    out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(bottom) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(bottom + 5) +
           "\" stroke=\"#333\"/>\n";
    out += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(bottom + 18) + "\" text-anchor=\"middle\" font-size=\"11\">" +
           tick_label(t) + "</text>\n";
  }
  for (const double t : yticks) {
    const double y = py(t);
    out += "<line x1=\"" + fmt(left - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(left) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"#333\"/>\n";
    out += "<text x=\"" + fmt(left - 8) + "\" y=\"" + fmt(y + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
           tick_label(t) + "</text>\n";
  }
  out += "<text x=\"" + fmt((left + right) / 2) + "\" y=\"" + fmt(height - 10.0) +
         "\" text-anchor=\"middle\" font-size=\"12\">" + escape_xml(panel.x_label) + "</text>\n";
  out += "<text x=\"" + fmt(ox + 14.0) + "\" y=\"" + fmt((top + bottom) / 2) +
         "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 " + fmt(ox + 14.0) + " " +
         fmt((top + bottom) / 2) + ")\">" + escape_xml(panel.y_label) + "</text>\n";

  for (std::size_t si = 0; si < panel.series.size(); ++si) {
    const auto& s = panel.series[si];
    const std::string color = kPalette[si % std::size(kPalette)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.style == Style::kScatter) {
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"2\" fill=\"" + color +
               "\" fill-opacity=\"0.6\"/>\n";
      }
    } else {
      std::string points;
      for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        if (!points.empty()) points += ' ';
        points += fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
      }
      out += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"";
      if (s.style == Style::kDashed) out += " stroke-dasharray=\"6 4\"";
      out += "/>\n";
    }
    const double ly = top + 14.0 + 14.0 * static_cast<double>(si);
    out += "<rect x=\"" + fmt(right - 120) + "\" y=\"" + fmt(ly - 8) + "\" width=\"10\" height=\"10\" fill=\"" + color +
           "\"/>\n";
    out += "<text x=\"" + fmt(right - 106) + "\" y=\"" + fmt(ly + 1) + "\" font-size=\"11\">" + escape_xml(s.label) +
           "</text>\n";
  }
  out += "</g>\n";
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, int count) {
  if (!(hi > lo) || count < 2) return {lo, hi};
  const double raw = (hi - lo) / (count - 1);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step = 10.0 * mag;
  if (norm <= 1.0) {
    step = mag;
  } else if (norm <= 2.0) {
    step = 2.0 * mag;
  } else if (norm <= 5.0) {
    step = 5.0 * mag;
  }
  std::vector<double> ticks;
  const double start = std::floor(lo / step) * step;
  for (double t = start; t < hi + step * 0.5; t += step) {
    ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    if (ticks.size() > 50) break;
  }
  return ticks;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string render(const std::vector<Panel>& panels, int panel_width, int panel_height) {
  const int total = panel_width * static_cast<int>(std::max<std::size_t>(panels.size(), 1));
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(total) + "\" height=\"" +
         std::to_string(panel_height) + "\" viewBox=\"0 0 " + std::to_string(total) + " " +
         std::to_string(panel_height) + "\" font-family=\"sans-serif\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    render_panel(out, panels[i], static_cast<int>(i) * panel_width, panel_width, panel_height);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace cfgctrl::svg
