#pragma once

#include <cstddef>

#include "rmfp/grid.hpp"
#include "rmfp/hamiltonian.hpp"

namespace rmfp {

/// Regularized operator A_eps = A_F~ + A_g + A_reg on zero-boundary node
/// fields, plus an optional manufactured forcing paired against cell averages.
class OperatorConfig {
 public:
  /// Validates q >= l + 1 and 0 < eps < 1.
  OperatorConfig(const HamiltonianModel& model, const ReferencePotential& ref, double q,
                 double eps);

  /// The eps = 0 operator A (no regularizer, no mass shift). Used by the
  /// weak-solution certificates only; it has no coercivity.
  static OperatorConfig unregularized(const HamiltonianModel& model, const ReferencePotential& ref);

  OperatorConfig with_eps(double eps) const;
  /// The referenced source must outlive the returned config.
  OperatorConfig with_source(const CellField& source) const;

  const HamiltonianModel& model() const noexcept { return *model_; }
  const ReferencePotential& ref() const noexcept { return *ref_; }
  const GridSpec& grid() const noexcept { return ref_->grid; }
  double q() const noexcept { return q_; }
  double eps() const noexcept { return eps_; }
  const CellField* source() const noexcept { return source_; }

 private:
  OperatorConfig() = default;

  const HamiltonianModel* model_ = nullptr;
  const ReferencePotential* ref_ = nullptr;
  double q_ = 3.0;
  double eps_ = 0.1;
  const CellField* source_ = nullptr;
};

/// max(3, l + 1).
double default_q(const HamiltonianModel& model);

struct PairingBreakdown {
  double perspective = 0.0;
  double ranking = 0.0;
  double regularizer = 0.0;
  /// -int source * avg(zeta); zero without a source.
  double forcing = 0.0;
  double total = 0.0;
};

/// <A_eps w, zeta> split by part. Throws DomainError naming the cell when the
/// shifted mass w_x + phi0_x + eps is not positive.
PairingBreakdown apply_operator(const OperatorConfig& cfg, const NodeField& w,
                                const NodeField& zeta);

/// Node representation r of A_eps w: <A_eps w, zeta> = sum_n r_n zeta_n for
/// every zeta vanishing on the boundary. Boundary entries of r are zero.
NodeField operator_action(const OperatorConfig& cfg, const NodeField& w);

/// J(w) = int F~(t, x, w_t, w_x + eps) + (eps/q) int (|avg w|^q + |grad w|^q).
double perspective_energy(const OperatorConfig& cfg, const NodeField& w);

/// <A_eps w1 - A_eps w2, w1 - w2>.
double monotonicity_gap(const OperatorConfig& cfg, const NodeField& w1, const NodeField& w2);

/// Numerical floor for monotonicity_gap: 1e-10 (1 + |w1| + |w2|)^2 with
/// Euclidean node norms.
double monotonicity_tolerance(const NodeField& w1, const NodeField& w2);

/// Shifted perspective at cell (i, k) of the reference potential. The error
/// message names the cell when the shifted mass is not positive.
PerspectiveEval shifted_perspective(const HamiltonianModel& model, const ReferencePotential& ref,
                                    std::size_t i, std::size_t k, double j, double m, double eps);

}  // namespace rmfp
