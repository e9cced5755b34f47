#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace rmfp {

/// Uniform tensor grid on (0, T) x (0, 1). Node (i, k) sits at (i dt, k dx);
/// cell (i, k) is the rectangle with lower-left node (i, k).
struct GridSpec {
  double T = 1.0;
  std::size_t Nt = 2;
  std::size_t Nx = 2;

  /// Validating constructor: T > 0, Nt >= 2, Nx >= 2.
  static GridSpec make(double T, std::size_t Nt, std::size_t Nx);

  double dt() const noexcept { return T / static_cast<double>(Nt); }
  double dx() const noexcept { return 1.0 / static_cast<double>(Nx); }
  double cell_weight() const noexcept { return dt() * dx(); }
  double t(std::size_t i) const noexcept { return static_cast<double>(i) * dt(); }
  double x(std::size_t k) const noexcept { return static_cast<double>(k) * dx(); }
  double t_mid(std::size_t i) const noexcept { return (static_cast<double>(i) + 0.5) * dt(); }
  double x_mid(std::size_t k) const noexcept { return (static_cast<double>(k) + 0.5) * dx(); }

  bool operator==(const GridSpec&) const = default;
};

/// Row-major 2-D array; the tag keeps node- and cell-collocated data apart.
template <class Tag>
class Field {
 public:
  Field() = default;
  Field(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(std::size_t i, std::size_t k) noexcept { return data_[i * cols_ + k]; }
  double operator()(std::size_t i, std::size_t k) const noexcept { return data_[i * cols_ + k]; }

  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  bool operator==(const Field&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct NodeTag {};
struct CellTag {};
/// Samples at the (Nt+1) x (Nx+1) grid nodes.
using NodeField = Field<NodeTag>;
/// Values at the Nt x Nx cell centers.
using CellField = Field<CellTag>;

inline NodeField make_node_field(const GridSpec& g, double fill = 0.0) {
  return NodeField(g.Nt + 1, g.Nx + 1, fill);
}
inline CellField make_cell_field(const GridSpec& g, double fill = 0.0) {
  return CellField(g.Nt, g.Nx, fill);
}

/// Initial and terminal densities sampled on the Nx+1 space nodes, strictly
/// positive and renormalized to unit trapezoid mass.
struct BoundaryDensities {
  std::vector<double> m0;
  std::vector<double> mT;

  /// Validates finiteness and positivity, then renormalizes both profiles.
  static BoundaryDensities make(const GridSpec& grid, std::vector<double> m0,
                                std::vector<double> mT);
};

/// Reference potential phi0(t, x) = (T-t)/T CumInt(m0)(x) + t/T CumInt(mT)(x)
/// with its cell derivatives.
struct ReferencePotential {
  GridSpec grid;
  BoundaryDensities densities;
  NodeField phi0;
  CellField phi0_t;
  CellField phi0_x;
  /// Cell averages of phi0.
  CellField phi0_avg;
  double min_phi0_x = 0.0;
};

double trapezoid(std::span<const double> samples, double h);
/// Cumulative trapezoid integral, first entry 0.
std::vector<double> cumulative_trapezoid(std::span<const double> samples, double h);

ReferencePotential build_reference_potential(const GridSpec& grid, const BoundaryDensities& bd);

/// Cell derivatives by the four-corner averaged stencil:
/// ft = (f(i+1,k) + f(i+1,k+1) - f(i,k) - f(i,k+1)) / (2 dt), fx analogous.
std::pair<CellField, CellField> cell_gradient(const GridSpec& grid, const NodeField& f);

/// Four-corner cell averages.
CellField cell_average(const GridSpec& grid, const NodeField& f);

/// Sum of cell values times dt dx.
double cell_integral(const GridSpec& grid, const CellField& g);

}  // namespace rmfp
