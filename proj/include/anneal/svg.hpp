#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace anneal {

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 800;
  int height = 480;
};

/// Line plot as an SVG 1.1 document: one polyline per series, axis ticks,
/// labels and a legend. Output depends only on the inputs. Non-finite points
/// are skipped.
void write_svg_plot(std::ostream& out, const PlotSpec& spec, const std::vector<PlotSeries>& series);

}  // namespace anneal
