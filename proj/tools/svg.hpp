#pragma once

#include <string>
#include <vector>

namespace wfcli {

// Grid of values, rows follow ys and columns xs. NaN cells are drawn grey.
struct Grid2 {
  std::vector<double> xs, ys;
  std::vector<std::vector<double>> z;
};

struct Marker {
  double x = 0, y = 0;
  std::string label;
};

std::string heatmap_svg(const Grid2& g, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel, const std::vector<Marker>& markers = {},
                        int contour_levels = 0);

struct ScatterPoint {
  double x = 0, y = 0, value = 0;
};

// Colour by value; log10 colour scale when log_scale is set.
std::string scatter_svg(const std::vector<ScatterPoint>& pts, const std::string& title,
                        const std::string& xlabel, const std::string& ylabel, bool log_scale);

struct Circle {
  double x = 0, y = 0, r = 0;
  std::string label;
};

// Devices drawn to scale inside the farm box; waves come from -x.
std::string layout_svg(const std::vector<Circle>& devices, double box_x0, double box_x1,
                       double box_y0, double box_y1, const std::string& title);

// Histogram with an optional vertical marker (NaN to skip).
std::string histogram_svg(const std::vector<double>& values, int bins, const std::string& title,
                          const std::string& xlabel, double marker, const std::string& marker_label);

}  // namespace wfcli
