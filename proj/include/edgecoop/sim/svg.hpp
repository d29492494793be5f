#pragma once

#include <string>
#include <vector>

namespace edgecoop::sim {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool log_y = false;
};

/// Static SVG document with axes, ticks, one polyline per series and a legend.
std::string render_svg(const LinePlot& plot, int width = 640, int height = 420);

}  // namespace edgecoop::sim
