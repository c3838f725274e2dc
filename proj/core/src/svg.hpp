#pragma once

#include <string>
#include <utility>
#include <vector>

namespace oodgate::detail {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;  // data coordinates
  bool dashed = false;
};

/// Minimal line-chart writer. Data coordinates map onto a fixed plot area;
/// numbers are printed with fixed precision so output is byte-stable.
struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  std::vector<std::string> x_tick_labels;  // optional categorical ticks at 0..k-1
  std::vector<Series> series;

  std::string render() const;
};

}  // namespace oodgate::detail
