#pragma once

#include <string>
#include <vector>

#include "ldg/data.hpp"
#include "ldg/evalkit.hpp"

namespace ldg {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Minimal rasterized charts for the diagnostic figures; written as png.
void render_line_chart(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<PlotSeries>& series, int width = 720,
                       int height = 480);

void render_bar_chart(const std::string& path, const std::string& title,
                      const std::string& y_label, const std::vector<std::string>& labels,
                      const std::vector<double>& values, int width = 720, int height = 480);

// Side-by-side per-domain distance and mean-weight bars.
void render_distance_weight_pair(const std::string& path, const DomainDistanceReport& report,
                                 int width = 960, int height = 480);

}  // namespace ldg
