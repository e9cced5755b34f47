#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "rmfp/grid.hpp"

namespace rmfp {

/// Piecewise-linear density profile from tabulated (x, density) pairs.
struct DensityTable {
  std::vector<double> x;
  std::vector<double> density;

  /// Linear interpolation; constant extension outside [x.front(), x.back()].
  double operator()(double at) const;
};

/// Reads a two-column CSV with header "x,density". x must be strictly
/// increasing and cover [0, 1].
DensityTable load_density_csv(const std::string& path);

/// Reads one row of a field CSV written by `write_field_csv` as a density
/// profile: the header supplies x, the row supplies the values.
DensityTable load_field_row(const std::string& path, std::size_t row = 0);

/// True when `spec` names a builtin profile: "uniform", "gauss(center,width)",
/// "sin-bump(amplitude)".
bool is_builtin_density(std::string_view spec);

/// Samples a builtin profile or a CSV file (any other string is a path) on the
/// Nx+1 space nodes. The result is not yet renormalized.
std::vector<double> sample_density(std::string_view spec, const GridSpec& grid);

}  // namespace rmfp
