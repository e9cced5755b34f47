#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rmfp/grid.hpp"

namespace rmfp {

/// Header row "t\x,<x_0>,...", then one row per time sample led by its t.
/// Values are written with 17 significant digits. Throws IoError.
void write_node_csv(const std::filesystem::path& path, const GridSpec& grid, const NodeField& f);
/// Same layout at cell centers.
void write_cell_csv(const std::filesystem::path& path, const GridSpec& grid, const CellField& f);

/// Rect-per-sample heatmap, t upward and x to the right, at most 512 px on
/// the longer side, with a linear two-color ramp and a labelled color bar.
/// `values` is row-major over (ts.size() x xs.size()).
void write_heatmap_svg(const std::filesystem::path& path, const std::string& title,
                       const std::vector<double>& ts, const std::vector<double>& xs,
                       const std::vector<double>& values);

struct Curve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line plot of several curves sharing axes.
void write_line_plot_svg(const std::filesystem::path& path, const std::string& title,
                         const std::string& xlabel, const std::string& ylabel,
                         const std::vector<Curve>& curves);

/// Writes text, creating parent directories. Throws IoError.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace rmfp
