#include "rmfp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rmfp/errors.hpp"
#include "rmfp/parallel.hpp"

namespace rmfp {

GridSpec GridSpec::make(double T, std::size_t Nt, std::size_t Nx) {
  if (!(T > 0.0) || !std::isfinite(T)) {
    throw ConfigError(fmt::format("horizon T must be positive (got {})", T));
  }
  if (Nt < 2 || Nx < 2) {
    throw ConfigError(fmt::format("grid needs Nt >= 2 and Nx >= 2 (got {} x {})", Nt, Nx));
  }
  return GridSpec{T, Nt, Nx};
}

double trapezoid(std::span<const double> samples, double h) {
  if (samples.size() < 2) return 0.0;
  double s = 0.5 * (samples.front() + samples.back());
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) s += samples[k];
  return s * h;
}

std::vector<double> cumulative_trapezoid(std::span<const double> samples, double h) {
  std::vector<double> out(samples.size(), 0.0);
  for (std::size_t k = 1; k < samples.size(); ++k) {
    out[k] = out[k - 1] + 0.5 * h * (samples[k - 1] + samples[k]);
  }
  return out;
}

namespace {

void normalize_density(std::vector<double>& m, const GridSpec& grid, const char* label) {
  if (m.size() != grid.Nx + 1) {
    throw ConfigError(
        fmt::format("{} has {} samples, expected {}", label, m.size(), grid.Nx + 1));
  }
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (!std::isfinite(m[k])) {
      throw ConfigError(fmt::format("{} is not finite at x = {}", label, grid.x(k)));
    }
    if (!(m[k] > 0.0)) {
      throw ConfigError(fmt::format("{} must be strictly positive (value {} at x = {})", label,
                                    m[k], grid.x(k)));
    }
  }
  const double mass = trapezoid(m, grid.dx());
  for (double& v : m) v /= mass;
}

}  // namespace

BoundaryDensities BoundaryDensities::make(const GridSpec& grid, std::vector<double> m0,
                                          std::vector<double> mT) {
  normalize_density(m0, grid, "m0");
  normalize_density(mT, grid, "mT");
  return BoundaryDensities{std::move(m0), std::move(mT)};
}

ReferencePotential build_reference_potential(const GridSpec& grid, const BoundaryDensities& bd) {
  ReferencePotential ref;
  ref.grid = grid;
  ref.densities = bd;
  auto c0 = cumulative_trapezoid(bd.m0, grid.dx());
  auto cT = cumulative_trapezoid(bd.mT, grid.dx());
  // Pin the unit total exactly; the inputs carry unit trapezoid mass up to rounding.
  const double tot0 = c0.back();
  const double totT = cT.back();
  for (auto& v : c0) v /= tot0;
  for (auto& v : cT) v /= totT;
  c0.back() = 1.0;
  cT.back() = 1.0;

  ref.phi0 = make_node_field(grid);
  for (std::size_t i = 0; i <= grid.Nt; ++i) {
    const double s = grid.t(i) / grid.T;
    for (std::size_t k = 0; k <= grid.Nx; ++k) {
      ref.phi0(i, k) = c0[k] + s * (cT[k] - c0[k]);
    }
  }
  std::tie(ref.phi0_t, ref.phi0_x) = cell_gradient(grid, ref.phi0);
  ref.phi0_avg = cell_average(grid, ref.phi0);
  const auto vals = ref.phi0_x.values();
  ref.min_phi0_x = *std::min_element(vals.begin(), vals.end());
  return ref;
}

std::pair<CellField, CellField> cell_gradient(const GridSpec& grid, const NodeField& f) {
  CellField ft = make_cell_field(grid);
  CellField fx = make_cell_field(grid);
  const double inv2dt = 0.5 / grid.dt();
  const double inv2dx = 0.5 / grid.dx();
  for (std::size_t i = 0; i < grid.Nt; ++i) {
    for (std::size_t k = 0; k < grid.Nx; ++k) {
      const double a = f(i, k);
      const double b = f(i, k + 1);
      const double c = f(i + 1, k);
      const double d = f(i + 1, k + 1);
      ft(i, k) = (c + d - a - b) * inv2dt;
      fx(i, k) = (b + d - a - c) * inv2dx;
    }
  }
  return {std::move(ft), std::move(fx)};
}

CellField cell_average(const GridSpec& grid, const NodeField& f) {
  CellField out = make_cell_field(grid);
  for (std::size_t i = 0; i < grid.Nt; ++i) {
    for (std::size_t k = 0; k < grid.Nx; ++k) {
      out(i, k) = 0.25 * (f(i, k) + f(i, k + 1) + f(i + 1, k) + f(i + 1, k + 1));
    }
  }
  return out;
}

double cell_integral(const GridSpec& grid, const CellField& g) {
  return tree_sum(g.values()) * grid.cell_weight();
}

}  // namespace rmfp
