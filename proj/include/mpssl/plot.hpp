#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mpssl::plot {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Minimal deterministic SVG line chart: axes, ticks, legend, one polyline per
// series. No timestamps, so re-emission is byte-identical.
void write_svg_chart(const std::string& path, const std::string& title,
                     const std::string& xlabel, const std::string& ylabel,
                     const std::vector<Series>& series,
                     const std::string& config_hash = "");

}  // namespace mpssl::plot
