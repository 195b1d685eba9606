#pragma once

#include <string>
#include <vector>

namespace iwm::cli {

// One curve with an optional min/max band (band drawn when lo/hi are
// non-empty and aligned with xs).
struct Series {
  std::string name;
  std::string color;  // e.g. "#1f77b4"
  std::vector<double> xs;
  std::vector<double> mean;
  std::vector<double> lo;
  std::vector<double> hi;
};

// Self-contained SVG document: axes, ticks, bands, mean lines and a legend.
std::string line_plot_svg(const std::string& title, const std::string& xlabel,
                          const std::string& ylabel, const std::vector<Series>& series,
                          int width = 720, int height = 440);

}  // namespace iwm::cli
