#include "rmfp/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "rmfp/errors.hpp"

namespace rmfp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_finite(double value, const char* what) {
  if (!std::isfinite(value)) {
    throw DomainError(fmt::format("{} must be finite (got {})", what, value));
  }
}

double parse_argument(std::string_view spec, std::string_view prefix) {
  std::string_view rest = spec.substr(prefix.size());
  if (rest.empty() || rest.back() != ')') {
    throw ConfigError(fmt::format("malformed hamiltonian spec '{}'", spec));
  }
  rest.remove_suffix(1);
  try {
    std::size_t used = 0;
    const std::string text(rest);
    const double value = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return value;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("malformed number in hamiltonian spec '{}'", spec));
  }
}

}  // namespace

HamiltonianModel HamiltonianModel::quadratic() {
  HamiltonianModel m;
  m.kind_ = HamiltonianKind::Quadratic;
  m.a_ = 2.0;
  m.a_conj_ = 2.0;
  // L = v^2/2 >= v^2/c - c forces c >= 2.
  m.growth_ = {2.0, 2.0, 2.0};
  m.name_ = "quadratic";
  return m;
}

HamiltonianModel HamiltonianModel::power_law(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) {
    throw ConfigError(fmt::format("power-law exponent must be > 1 (got {})", a));
  }
  HamiltonianModel m;
  m.kind_ = HamiltonianKind::PowerLaw;
  m.a_ = a;
  m.a_conj_ = a / (a - 1.0);
  m.name_ = fmt::format("power({})", a);
  m.growth_ = {m.a_conj_, m.a_conj_, 1.0};
  m.growth_.c = fit_growth_constant(m, m.a_conj_, m.a_conj_);
  return m;
}

HamiltonianModel HamiltonianModel::numeric(NumericHamiltonian spec) {
  if (!spec.H || !spec.DpH) throw ConfigError("numeric hamiltonian needs H and DpH");
  if (!(spec.l > 1.0) || !(spec.kappa > 1.0)) {
    throw ConfigError("numeric hamiltonian growth exponents must exceed 1");
  }
  if (!(spec.p_bracket > 0.0)) throw ConfigError("numeric hamiltonian bracket must be positive");
  HamiltonianModel m;
  m.kind_ = HamiltonianKind::Numeric;
  m.a_ = 0.0;
  m.a_conj_ = 0.0;
  m.name_ = spec.name.empty() ? "numeric" : spec.name;
  m.growth_ = {spec.l, spec.kappa, 1.0};
  m.numeric_ = std::move(spec);
  m.growth_.c = fit_growth_constant(m, m.growth_.l, m.growth_.kappa);
  return m;
}

HamiltonianModel HamiltonianModel::mixed_quartic(double b) {
  if (!(b > 0.0) || !std::isfinite(b)) {
    throw ConfigError(fmt::format("mixed-quartic coefficient must be > 0 (got {})", b));
  }
  NumericHamiltonian spec;
  spec.name = fmt::format("mixed-quartic({})", b);
  spec.H = [b](double, double p) { return 0.5 * p * p + 0.25 * b * p * p * p * p; };
  spec.DpH = [b](double, double p) { return p + b * p * p * p; };
  spec.DppH = [b](double, double p) { return 1.0 + 3.0 * b * p * p; };
  // L grows like |v|^(4/3) at infinity.
  spec.l = 4.0 / 3.0;
  spec.kappa = 4.0 / 3.0;
  return numeric(std::move(spec));
}

HamiltonianModel HamiltonianModel::parse(std::string_view spec) {
  if (spec == "quadratic") return quadratic();
  for (std::string_view prefix : {"power(", "power-law(", "powerlaw("}) {
    if (spec.starts_with(prefix)) return power_law(parse_argument(spec, prefix));
  }
  if (spec.starts_with("mixed-quartic(")) {
    return mixed_quartic(parse_argument(spec, "mixed-quartic("));
  }
  throw ConfigError(fmt::format(
      "unknown hamiltonian '{}' (expected quadratic, power(a) or mixed-quartic(b))", spec));
}

HamiltonianEval HamiltonianModel::eval(double x, double p) const {
  require_finite(x, "x");
  require_finite(p, "p");
  switch (kind_) {
    case HamiltonianKind::Quadratic:
      return {0.5 * p * p, p};
    case HamiltonianKind::PowerLaw: {
      const double ap = std::pow(std::abs(p), a_ - 1.0);
      return {std::abs(p) * ap / a_, sign(p) * ap};
    }
    case HamiltonianKind::Numeric:
      return {numeric_.H(x, p), numeric_.DpH(x, p)};
  }
  return {kNaN, kNaN};
}

LagrangianEval HamiltonianModel::lagrangian(double x, double v) const {
  require_finite(x, "x");
  require_finite(v, "v");
  switch (kind_) {
    case HamiltonianKind::Quadratic:
      return {0.5 * v * v, v, -v};
    case HamiltonianKind::PowerLaw: {
      const double av = std::pow(std::abs(v), a_conj_ - 1.0);
      const double dvl = sign(v) * av;
      return {std::abs(v) * av / a_conj_, dvl, -dvl};
    }
    case HamiltonianKind::Numeric:
      return numeric_lagrangian(x, v);
  }
  return {kNaN, kNaN, kNaN};
}

// Stationarity -v - D_pH(x, p) = 0 has a unique root by strict convexity;
// safeguarded Newton keeps the iterate inside a shrinking bracket.
LagrangianEval HamiltonianModel::numeric_lagrangian(double x, double v) const {
  const double P = numeric_.p_bracket;
  auto f = [&](double p) { return numeric_.DpH(x, p) + v; };
  auto df = [&](double p) {
    if (numeric_.DppH) return numeric_.DppH(x, p);
    const double h = 1e-6 * (1.0 + std::abs(p));
    return (numeric_.DpH(x, p + h) - numeric_.DpH(x, p - h)) / (2.0 * h);
  };
  double lo = -P;
  double hi = P;
  const double f_lo = f(lo);
  const double f_hi = f(hi);
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw ConvergenceError(
        fmt::format("Legendre maximizer for v = {} not bracketed in [-{}, {}]", v, P, P),
        std::min(std::abs(f_lo), std::abs(f_hi)));
  }
  double p = std::clamp(-v, lo, hi);
  double fp = f(p);
  const double ftol = 1e-14 * (1.0 + std::abs(v));
  bool done = std::abs(fp) <= ftol;
  for (int it = 0; it < 300 && !done; ++it) {
    if (fp > 0.0) {
      hi = p;
    } else {
      lo = p;
    }
    const double slope = df(p);
    double next = (slope > 0.0) ? p - fp / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    p = next;
    fp = f(p);
    done = std::abs(fp) <= ftol || (hi - lo) <= 4e-16 * (1.0 + std::abs(p));
  }
  if (!done) {
    throw ConvergenceError(fmt::format("Legendre maximizer for v = {} did not converge", v),
                           std::abs(fp));
  }
  const double L = -v * p - numeric_.H(x, p);
  return {L, -p, p};
}

PerspectiveEval HamiltonianModel::perspective(double x, double j, double m) const {
  require_finite(j, "flux j");
  require_finite(m, "mass m");
  if (m < 0.0) throw DomainError(fmt::format("perspective mass must be >= 0 (got {})", m));
  if (m == 0.0) {
    return {j == 0.0 ? 0.0 : kInf, kNaN, kNaN, false};
  }
  const double v = j / m;
  switch (kind_) {
    case HamiltonianKind::Quadratic:
      return {0.5 * j * v, v, -0.5 * v * v};
    case HamiltonianKind::PowerLaw: {
      const double av = std::pow(std::abs(v), a_conj_ - 1.0);
      const double L = std::abs(v) * av / a_conj_;
      const double dvl = sign(v) * av;
      return {m * L, dvl, -dvl * v + L};
    }
    case HamiltonianKind::Numeric: {
      const LagrangianEval le = numeric_lagrangian(x, v);
      return {m * le.L, le.DvL, -le.DvL * v + le.L};
    }
  }
  return {kNaN, kNaN, kNaN, false};
}

HamiltonianEval eval_hamiltonian(const HamiltonianModel& model, double x, double p) {
  return model.eval(x, p);
}

LagrangianEval legendre_lagrangian(const HamiltonianModel& model, double x, double v) {
  return model.lagrangian(x, v);
}

PerspectiveEval perspective(const HamiltonianModel& model, double x, double j, double m) {
  return model.perspective(x, j, m);
}

PerspectiveEval shifted_perspective(const HamiltonianModel& model, double x, double phi0_t,
                                    double phi0_x, double j, double m, double eps) {
  const double mass = m + phi0_x + eps;
  if (!(mass > 0.0)) {
    throw DomainError(fmt::format("nonpositive shifted mass {} at x = {}", mass, x));
  }
  const PerspectiveEval p = model.perspective(x, -j - phi0_t, mass);
  return {p.F, -p.Fj, p.Fm, true};
}

double check_subgradient(const HamiltonianModel& model, double x, double j, double m, double j0,
                         double m0) {
  if (!(m > 0.0) || !(m0 > 0.0)) {
    throw DomainError("check_subgradient needs strictly positive masses");
  }
  const PerspectiveEval base = model.perspective(x, j, m);
  const PerspectiveEval target = model.perspective(x, j0, m0);
  return target.F - base.Fj * j0 - base.Fm * m0;
}

double fit_growth_constant(const HamiltonianModel& model, double l, double kappa) {
  double c = 1.0;
  auto visit = [&](double v) {
    const LagrangianEval le = model.lagrangian(0.5, v);
    const double av = std::abs(v);
    c = std::max(c, std::abs(le.DvL) / (std::pow(av, l - 1.0) + 1.0));
    // c L + c^2 >= |v|^kappa  <=>  c >= positive root of c^2 + L c - |v|^kappa
    const double vk = std::pow(av, kappa);
    c = std::max(c, 0.5 * (-le.L + std::sqrt(le.L * le.L + 4.0 * vk)));
  };
  visit(0.0);
  for (int s = 0; s <= 120; ++s) {
    const double v = std::pow(10.0, -3.0 + 0.05 * s);
    visit(v);
    visit(-v);
  }
  return 1.05 * c;
}

}  // namespace rmfp
