#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "rmfp/grid.hpp"
#include "rmfp/hamiltonian.hpp"

namespace rmfp {

/// Value function and density recovered from a potential.
struct MfpSolution {
  GridSpec grid;
  NodeField phi;
  CellField m;
  NodeField u;
  /// phi_t, the discrete m D_pH(x, u_x).
  CellField flux;
  /// 1 where m <= m_floor; those cells carry no u-integrand.
  std::vector<char> masked;
  std::size_t masked_count = 0;
};

inline constexpr double kDensityFloor = 1e-10;

/// Linking-lemma reconstruction: phi = psi + phi0, m = phi_x and
/// u(t, x) = -int_0^x F_j(y, -phi_t, phi_x) dy - int_0^t F_m(0, -phi_t, phi_x)|_(x=0) ds.
/// The x = 0 trace uses the first cell column. u(0, 0) = 0.
/// Throws DegenerateDensityError when more than 20% of cells are masked.
MfpSolution reconstruct_solution(const HamiltonianModel& model, const ReferencePotential& ref,
                                 const NodeField& psi);

struct ResidualNorms {
  double l1 = 0.0;
  double linf = 0.0;
};

struct MfpResiduals {
  /// -u_t + H(x, u_x) - int_0^x m (- int_0^x source when forced), on cells.
  CellField hj;
  /// m_t - (m D_pH(x, u_x))_x at interior nodes; boundary entries are zero.
  NodeField ct;
  /// (left, right) values of m D_pH(x, u_x) in the edge cells of each cell row.
  std::vector<std::pair<double, double>> flux_bc;
  /// m - m0 on the first cell row and m - mT on the last, at cell centers.
  std::vector<double> planning_bc0;
  std::vector<double> planning_bcT;

  ResidualNorms hj_norm;
  ResidualNorms ct_norm;
  ResidualNorms flux_bc_norm;
  ResidualNorms planning_norm;
};

/// Residuals of the ranking MFP system for a reconstructed solution. With a
/// manufactured source the HJ residual is shifted by int_0^x source so that
/// the forced classical solution has zero residual.
MfpResiduals mfp_residuals(const HamiltonianModel& model, const ReferencePotential& ref,
                           const MfpSolution& sol, const CellField* source = nullptr);

/// max over unmasked cells of |D_pH(x, u_x) - phi_t / phi_x|.
double linking_consistency(const HamiltonianModel& model, const MfpSolution& sol);

/// max over unmasked cells of |F_j (-phi_t) + F_m phi_x - F|.
double euler_identity_defect(const HamiltonianModel& model, const MfpSolution& sol);

}  // namespace rmfp
