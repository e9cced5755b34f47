#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace rmfp {

enum class HamiltonianKind { Quadratic, PowerLaw, Numeric };

/// Constants of the growth envelope |D_vL| <= c|v|^(l-1) + c and L >= |v|^kappa / c - c.
struct GrowthConstants {
  double l;
  double kappa;
  double c;
};

struct HamiltonianEval {
  double H;
  double DpH;
};

/// Result of the Legendre transform L(x, v) = sup_p (-v p - H(x, p)).
struct LagrangianEval {
  double L;
  double DvL;
  double argmax_p;
};

/// Perspective value F(x, j, m) and its partials.
///
/// For m > 0 this is m L(x, j/m). At m == 0 the value is extended: F = 0 when
/// j == 0 and +inf otherwise, and the derivatives are NaN with
/// `derivatives_defined` cleared.
struct PerspectiveEval {
  double F;
  double Fj;
  double Fm;
  bool derivatives_defined = true;
};

/// User-supplied Hamiltonian whose Lagrangian is computed numerically.
struct NumericHamiltonian {
  std::string name;
  std::function<double(double x, double p)> H;
  std::function<double(double x, double p)> DpH;
  /// Optional; a centered difference of DpH is used when empty.
  std::function<double(double x, double p)> DppH;
  double l = 2.0;
  double kappa = 2.0;
  /// Maximizer search bracket [-p_bracket, p_bracket].
  double p_bracket = 1e3;
};

/// Strictly convex, coercive Hamiltonian H(x, p) with its Legendre dual.
///
/// Shipped closed forms are x-independent; x is carried through the interface
/// so x-dependent models can be added as `Numeric`.
class HamiltonianModel {
 public:
  /// H = p^2 / 2.
  static HamiltonianModel quadratic();
  /// H = |p|^a / a, a > 1.
  static HamiltonianModel power_law(double a);
  static HamiltonianModel numeric(NumericHamiltonian spec);
  /// H = p^2/2 + b p^4/4 with a numerically computed Lagrangian.
  static HamiltonianModel mixed_quartic(double b);
  /// Parses "quadratic", "power(a)" or "mixed-quartic(b)".
  static HamiltonianModel parse(std::string_view spec);

  HamiltonianKind kind() const noexcept { return kind_; }
  /// a for PowerLaw, 2 for Quadratic, 0 for Numeric.
  double exponent() const noexcept { return a_; }
  const GrowthConstants& growth() const noexcept { return growth_; }
  const std::string& name() const noexcept { return name_; }

  HamiltonianEval eval(double x, double p) const;
  LagrangianEval lagrangian(double x, double v) const;
  PerspectiveEval perspective(double x, double j, double m) const;

 private:
  HamiltonianModel() = default;
  LagrangianEval numeric_lagrangian(double x, double v) const;

  HamiltonianKind kind_ = HamiltonianKind::Quadratic;
  double a_ = 2.0;
  double a_conj_ = 2.0;
  GrowthConstants growth_{2.0, 2.0, 2.0};
  std::string name_;
  NumericHamiltonian numeric_;
};

HamiltonianEval eval_hamiltonian(const HamiltonianModel& model, double x, double p);
LagrangianEval legendre_lagrangian(const HamiltonianModel& model, double x, double v);
PerspectiveEval perspective(const HamiltonianModel& model, double x, double j, double m);

/// F~(t, x, j, m) = F(x, -j - phi0_t, m + phi0_x + eps) with partials
/// (F~_j, F~_m) = (-F_j, F_m) at the shifted point.
PerspectiveEval shifted_perspective(const HamiltonianModel& model, double x, double phi0_t,
                                    double phi0_x, double j, double m, double eps);

/// Slack F(x, j0, m0) - F_j(x, j, m) j0 - F_m(x, j, m) m0, nonnegative by convexity.
double check_subgradient(const HamiltonianModel& model, double x, double j, double m, double j0,
                         double m0);

/// Smallest c (up to a 5% margin) for which the growth envelope holds on a
/// log-spaced velocity sample, given exponents l and kappa.
double fit_growth_constant(const HamiltonianModel& model, double l, double kappa);

}  // namespace rmfp
