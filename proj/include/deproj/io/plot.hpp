#pragma once

#include <string>
#include <vector>

namespace deproj {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lower;  // optional band, same length as x
  std::vector<double> upper;
  std::string color = "#1f77b4";
};

struct PlotSpec {
  std::string title;
  std::string x_label = "radius [pixels]";
  std::string y_label = "emissivity";
  bool log_x = true;
  bool log_y = true;
  std::vector<PlotSeries> series;
};

/// Standalone SVG line plot; non-positive values are skipped on log axes.
std::string render_svg(const PlotSpec& spec);

/// Builds a plot from CSV files written by the other commands (profile,
/// onion, bands or comparison tables) and returns the SVG text.
std::string plot_csv_files(const std::vector<std::string>& paths, const std::string& title);

}  // namespace deproj
