#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rmfp/grid.hpp"
#include "rmfp/vi_operator.hpp"

namespace rmfp {

/// Discrete admissible set in difference coordinates.
///
/// Each interior time row i = 1..Nt-1 of psi is described by its Nx node
/// differences g_k = psi(i, k+1) - psi(i, k). A row is admissible when
/// sum_k g_k = 0 (zero lateral values) and g_k >= -(phi0(i, k+1) - phi0(i, k))
/// (nonnegative density on every horizontal edge). Rows 0 and Nt are pinned
/// to zero. Edge nonnegativity implies w_x + phi0_x >= 0 on every cell.
class FeasibleSet {
 public:
  explicit FeasibleSet(const ReferencePotential& ref);

  const GridSpec& grid() const noexcept { return grid_; }
  std::size_t rows() const noexcept { return grid_.Nt - 1; }
  std::size_t cols() const noexcept { return grid_.Nx; }
  std::span<const double> lower_bounds(std::size_t row) const noexcept {
    return {lower_.data() + row * cols(), cols()};
  }

  /// Projects every row of g in place.
  void project(std::span<double> g) const;
  /// Projects interior node values, (Nt-1) rows of Nx-1 entries, in place.
  void project_potential(std::span<double> interior) const;

  /// Zero boundary and min cell (w_x + phi0_x) >= -tol.
  bool contains(const NodeField& w, double tol = 1e-12) const;

 private:
  GridSpec grid_;
  std::vector<double> lower_;
  CellField phi0_x_;
};

/// Euclidean projection of `candidate` onto {g : g_k >= lower_k, sum g = 0}.
/// Exact breakpoint search; throws ConfigError when sum(lower) > 0.
std::vector<double> project_feasible(std::span<const double> lower_bounds,
                                     std::span<const double> candidate);

/// Euclidean projection of the interior values psi_1..psi_{N-1} of one row onto
/// {psi_{k+1} - psi_k >= lower_k, psi_0 = psi_N = 0}. With chi = psi + Phi,
/// Phi_k = -sum_{j<k} lower_j, the set is {0 <= chi_1 <= ... <= chi_{N-1} <= Phi_N},
/// so the projection is a clipped isotonic regression (pool adjacent violators).
std::vector<double> project_potential_row(std::span<const double> lower_bounds,
                                          std::span<const double> interior);

/// Prefix-sum map from difference coordinates to a zero-boundary node field.
NodeField psi_from_differences(const GridSpec& grid, std::span<const double> g);
/// Row differences of the interior rows of psi.
std::vector<double> differences_from_psi(const GridSpec& grid, const NodeField& psi);

/// Variables the extragradient iteration runs in. Both describe the same
/// feasible set; the Euclidean metric differs.
enum class SolverCoordinates {
  /// Interior node values of psi; projection by isotonic regression.
  Potential,
  /// Per-row x-differences of psi; projection by breakpoint search. The
  /// prefix-sum congruence squares the conditioning of the time coupling.
  Differences,
};

struct SolverOptions {
  SolverCoordinates coordinates = SolverCoordinates::Potential;
  double tol = 1e-7;
  std::size_t max_iter = 200000;
  double theta = 0.9;
  double tau0 = 1.0;
  /// Step enlargement after an accepted step whose local Lipschitz ratio is
  /// below theta / 2; 1 disables growth.
  double tau_growth = 1.2;
  /// Residual and energy samples are recorded every `trace_stride` iterations.
  std::size_t trace_stride = 100;
};

/// Iterate of the extragradient method.
struct SolveState {
  std::vector<double> g;
  double eps = 0.0;
  double tau = 0.0;
  std::size_t iter = 0;
  double residual = 0.0;
  std::vector<double> history;

  static SolveState zero(const GridSpec& grid);
  static SolveState from_psi(const GridSpec& grid, const NodeField& psi);
};

/// Diagnostics at a solve's final iterate.
struct SolveReport {
  bool converged = false;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  double eps = 0.0;
  double final_tau = 0.0;
  /// Best-so-far fixed-point residual, sampled every trace_stride iterations.
  std::vector<double> residual_trace;
  std::vector<double> energy_trace;
  /// int |psi_t| + |psi_x|.
  double bv_bound = 0.0;
  double psi_x_l1 = 0.0;
  double psi_t_l1 = 0.0;
  /// int |psi_t + phi0_t|^kappa / (psi_x + phi0_x + eps)^(kappa - 1).
  double kappa_energy = 0.0;
  double min_density = 0.0;
  /// max over cell rows of |sum_k (psi_x + phi0_x) dx - 1|.
  double row_mass_error = 0.0;
  /// Mean density in the first and last cell columns relative to the row
  /// mean (1 for a flat profile); a proxy for lateral mass concentration.
  double pileup_left = 0.0;
  double pileup_right = 0.0;
};

struct SolveResult {
  NodeField psi;
  SolveReport report;
  SolveState state;
};

/// Projected extragradient for <A_eps psi, w - psi> >= 0 over the feasible set.
/// Returns a nonconverged report when max_iter is exhausted; throws
/// StagnationError when the step size collapses below 1e-14.
SolveResult solve_vi(const OperatorConfig& cfg, const FeasibleSet& feasible,
                     std::optional<SolveState> init, const SolverOptions& options);

/// Post-solve quantities for an arbitrary psi.
SolveReport evaluate_report(const OperatorConfig& cfg, const NodeField& psi);

struct StageReport {
  double eps = 0.0;
  SolveReport report;
};

struct ContinuationResult {
  NodeField psi;
  std::vector<StageReport> stages;
  bool completed = false;
  /// Index of the first nonconverged stage.
  std::optional<std::size_t> failed_stage;
};

/// Default schedule (0.5, 0.25, 0.1, 0.05, 0.02, 0.01).
std::vector<double> default_eps_schedule();

/// Solves the stages of a strictly decreasing eps schedule, each warm-started
/// from the previous solution. Stops at the first nonconverged stage.
/// `chained = false` cold-starts every stage from zero.
ContinuationResult continuation(const OperatorConfig& base, const FeasibleSet& feasible,
                                const std::vector<double>& schedule, const SolverOptions& options,
                                bool chained = true);

/// Discrete L1 norm: sum over nodes |f| weighted by dt dx.
double node_l1(const GridSpec& grid, const NodeField& f);

}  // namespace rmfp
