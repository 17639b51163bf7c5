// Copyright 2026 The cfgctrl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cfgctrl::svg {

enum class Style { kLine, kScatter, kDashed };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  Style style = Style::kLine;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

/// Up to `count` round tick positions covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, int count = 5);

std::string escape_xml(std::string_view text);

/// Renders the panels side by side as one standalone SVG document. Non-finite
/// points are skipped.
std::string render(const std::vector<Panel>& panels, int panel_width = 480, int panel_height = 340);

}  // namespace cfgctrl::svg
