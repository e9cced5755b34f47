#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "rmfp/grid.hpp"
#include "rmfp/hamiltonian.hpp"
#include "rmfp/solver.hpp"

namespace rmfp {

/// Outcome of one check. For upper-bound checks passed = (measured <= bound);
/// lower-bound checks store the reversed comparison.
struct Certificate {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double bound = 0.0;
  std::string details;
  double wall_time_ms = 0.0;
};

Certificate upper_bound_certificate(std::string name, double measured, double bound,
                                    std::string details = {});
Certificate lower_bound_certificate(std::string name, double measured, double bound,
                                    std::string details = {});

// ---------------------------------------------------------------------------
// Identities and operator properties

/// Duality identities on a 200-point velocity grid and the perspective
/// identities (finite-difference partials, one-homogeneity, subgradient
/// slack) on `tuples` random (j, m) pairs.
std::vector<Certificate> identity_certificates(const HamiltonianModel& model, std::uint64_t seed,
                                               std::size_t tuples = 1000);

/// Random feasible potential: uniform interior noise of the given amplitude
/// projected onto the admissible set.
NodeField random_feasible_field(const FeasibleSet& feasible, std::mt19937_64& rng,
                                double amplitude = 0.25);

/// <A_eps w1 - A_eps w2, w1 - w2> >= -monotonicity_tolerance over random pairs.
Certificate monotonicity_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                                     std::size_t pairs, std::uint64_t seed);

/// Five-point differences of perspective_energy against the perspective and
/// regularizer parts of the pairing; worst relative error <= 1e-5.
Certificate gradient_structure_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                                           std::size_t pairs, std::uint64_t seed);

struct PairingValue {
  double value = 0.0;
  /// 1 + sum over nodes of |r_n (w - psi)_n|.
  double scale = 1.0;
};

/// <A_eps psi, w - psi>.
PairingValue vi_pairing(const OperatorConfig& cfg, const NodeField& psi, const NodeField& w);

/// Worst of vi_pairing / scale over random feasible w must be >= -tol.
Certificate vi_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                           const NodeField& psi, std::size_t samples, std::uint64_t seed,
                           double tol = 1e-5);

// ---------------------------------------------------------------------------
// Weak-solution (Minty) certificate

enum class TestFamily { PolynomialBump, FourierBump };

/// eta = phi0 + s * bump, where bump vanishes on the boundary and s is halved
/// until min cell eta_x > 0.
///  PolynomialBump: t(T-t) x(1-x) sum_{a,b} c_ab (t/T)^a x^b, coefficients
///                  row-major over a square degree table.
///  FourierBump:    sum_{n,l} c_nl sin(n pi t / T) sin(l pi x), row-major.
struct TestFunctionSpec {
  TestFamily family = TestFamily::PolynomialBump;
  std::vector<double> coefficients;
};

/// Random spec with `terms` coefficients per direction drawn from the seed.
TestFunctionSpec random_test_function(std::uint64_t seed, TestFamily family, int terms = 3,
                                      double amplitude = 1.0);

/// Builds the node field eta. Throws ConfigError if no scaling gives eta_x > 0.
NodeField build_test_function(const ReferencePotential& ref, const TestFunctionSpec& spec);

struct MintyValue {
  double value = 0.0;
  /// 1 + sum of magnitudes of the volume, pairing and lateral contributions.
  double scale = 1.0;
};

/// Discrete weak-solution inequality for phi = psi + phi0 against eta:
/// int [-F_j eta_t + F_m eta_x + eta eta_x] - [int -F_j D_t phi + int F_m D_x phi
/// + int eta D_x phi + L(0,0) int phi(t,0) dt + (L(1,0)+1) int (1 - phi(t,1)) dt],
/// with F evaluated at (x, -eta_t, eta_x). Throws ConfigError unless eta_x > 0
/// on every cell.
MintyValue minty_value(const HamiltonianModel& model, const ReferencePotential& ref,
                       const NodeField& psi, const NodeField& eta);

/// passed when value >= -tol_minty * scale.
Certificate minty_certificate(const HamiltonianModel& model, const ReferencePotential& ref,
                              const NodeField& psi, const TestFunctionSpec& eta,
                              double tol_minty = 1e-5);

// ---------------------------------------------------------------------------
// A-priori estimates and trace attainment

/// Certificates over a continuation: convergence of every stage, finiteness
/// and 2x-median uniformity of kappa_energy, |psi_x|_L1 <= 2T, the assembled
/// |psi_t|_L1 bound, bv_bound, and unit row mass.
std::vector<Certificate> apriori_certificates(const ReferencePotential& ref,
                                              const std::vector<StageReport>& stages,
                                              double kappa);

/// Window masses W(delta) = int_{T-delta}^T int |psi_t + phi0_t| over the
/// given widths (rounded to whole cell rows); the log-log slope must be at
/// least (kappa-1)/kappa - 0.15. Fewer than three nonzero windows gives an
/// inconclusive pass. Empty `deltas` selects dt * 2^j up to T/2.
Certificate trace_scaling_diagnostic(const ReferencePotential& ref, const NodeField& psi,
                                     double kappa, std::vector<double> deltas = {});

/// Least-squares slope of log(W) against log(delta) over positive entries.
double fit_log_slope(const std::vector<double>& deltas, const std::vector<double>& masses);

// ---------------------------------------------------------------------------
// Manufactured solutions

/// Closed-form potential phi*(t, x) with its first derivatives.
struct ManufacturedPotential {
  std::string name;
  std::function<double(double, double)> phi;
  std::function<double(double, double)> phi_t;
  std::function<double(double, double)> phi_x;

  /// phi* = x + alpha t (T - t) x (1 - x) for uniform endpoint densities.
  static ManufacturedPotential bump(double T, double alpha);
};

struct ManufacturedProblem {
  /// (F_j)_t + (-F_m)_x - phi*_x by a centered cell stencil of exact fluxes.
  CellField source;
  NodeField phi_star;
  /// phi* - phi0 on nodes; zero on the boundary.
  NodeField psi_star;
};

/// Throws ConfigError unless phi* matches phi0 on boundary nodes to 1e-12 and
/// phi*_x > 0 at every sample point used by the stencil.
ManufacturedProblem mms_source(const HamiltonianModel& model, const ReferencePotential& ref,
                               const ManufacturedPotential& phi_star);

struct MmsLevel {
  std::size_t n = 0;
  double h = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  double psi_error_l1 = 0.0;
  double hj_l1 = 0.0;
  double ct_l1 = 0.0;
  double linking_linf = 0.0;
};

struct MmsStudy {
  std::vector<MmsLevel> levels;
  /// Observed orders between consecutive levels.
  std::vector<double> psi_orders;
  std::vector<double> hj_orders;
  std::vector<double> ct_orders;
};

struct MmsOptions {
  std::vector<std::size_t> levels{16, 32, 64};
  double T = 1.0;
  double alpha = 0.5;
  double eps = 1e-6;
  SolverOptions solver = [] {
    SolverOptions o;
    o.tol = 1e-10;
    o.max_iter = 400000;
    o.trace_stride = 1000;
    return o;
  }();
};

/// Forced solves on n x n grids with uniform endpoints; errors against phi*.
MmsStudy run_mms_study(const HamiltonianModel& model, const MmsOptions& options);

/// L1 residuals at or below this on every level are rounding noise; their
/// observed order is undefined and the order check passes on the floor.
inline constexpr double kMmsRoundoffFloor = 1e-10;

/// mms_converged, order >= 1 for the psi error and the HJ and continuity
/// residuals, and the largest linking defect over all levels <= 1e-4.
std::vector<Certificate> mms_certificates(const MmsStudy& study);

// ---------------------------------------------------------------------------
// Full battery

struct SuiteConfig {
  GridSpec grid = GridSpec::make(1.0, 32, 32);
  std::string hamiltonian = "quadratic";
  std::string m0 = "uniform";
  std::string mT = "uniform";
  double q = 0.0;  // 0 selects default_q
  std::vector<double> schedule = default_eps_schedule();
  /// eps of the single regularized solve and the two-start check.
  double baseline_eps = 0.05;
  SolverOptions solver{};
  std::uint64_t seed = 1;
  std::size_t monotonicity_pairs = 1000;
  std::size_t vi_samples = 100;
  std::size_t minty_tests = 20;
  double minty_tol = 1e-5;
  bool run_mms = true;
  MmsOptions mms{};
};

/// Validates q >= l + 1 and the densities; throws ConfigError before any solve.
void validate_suite_config(const SuiteConfig& config);

/// Runs every check and aggregates; individual failures are recorded, never
/// thrown. Configuration errors are thrown before the first check.
std::vector<Certificate> run_suite(const SuiteConfig& config);

}  // namespace rmfp
