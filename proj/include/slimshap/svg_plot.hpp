#pragma once

#include <string>
#include <vector>

namespace slimshap {

// Minimal static SVG charts for the benchmark outputs: line or scatter series
// on linear axes with ticks and a legend.  No external assets, one file each.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool points_only = false;  // scatter when true, line with markers otherwise
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::string& path);

}  // namespace slimshap
