#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace tpmsvox {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct SvgPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  bool descending_x = false;  // largest x on the left
  std::vector<SvgSeries> series;
};

/// Standalone line plot with markers, axes, ticks and a legend.
std::string render_svg(const SvgPlot& plot);
void write_svg(const SvgPlot& plot, const std::filesystem::path& path);

}  // namespace tpmsvox
