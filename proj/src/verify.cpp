#include "rmfp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"
#include "rmfp/parallel.hpp"
#include "rmfp/reconstruct.hpp"

namespace rmfp {

Certificate upper_bound_certificate(std::string name, double measured, double bound,
                                    std::string details) {
  return {std::move(name), measured <= bound, measured, bound, std::move(details), 0.0};
}

Certificate lower_bound_certificate(std::string name, double measured, double bound,
                                    std::string details) {
  return {std::move(name), measured >= bound, measured, bound, std::move(details), 0.0};
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

NodeField difference(const NodeField& a, const NodeField& b) {
  NodeField d = a;
  auto out = d.values();
  const auto rhs = b.values();
  for (std::size_t n = 0; n < out.size(); ++n) out[n] -= rhs[n];
  return d;
}

NodeField axpy(const NodeField& base, double s, const NodeField& dir) {
  NodeField out = base;
  auto v = out.values();
  const auto d = dir.values();
  for (std::size_t n = 0; n < v.size(); ++n) v[n] += s * d[n];
  return out;
}

double min_cell_dx(const GridSpec& g, const NodeField& f) {
  const auto [ft, fx] = cell_gradient(g, f);
  const auto v = fx.values();
  return *std::min_element(v.begin(), v.end());
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Certificate> identity_certificates(const HamiltonianModel& model, std::uint64_t seed,
                                               std::size_t tuples) {
  std::vector<Certificate> out;
  const double x = 0.37;
  {
    const auto start = Clock::now();
    double dph = 0.0;
    double ham = 0.0;
    for (int n = 0; n < 200; ++n) {
      const double v = -5.0 + 10.0 * n / 199.0;
      const LagrangianEval le = model.lagrangian(x, v);
      const HamiltonianEval he = model.eval(x, -le.DvL);
      dph = std::max(dph, std::abs(he.DpH + v));
      ham = std::max(ham, std::abs(he.H - (v * le.DvL - le.L)));
    }
    out.push_back(upper_bound_certificate("duality_dph", dph, 1e-8,
                                          "max |D_pH(x, -D_vL(x, v)) + v| over v in [-5, 5]"));
    out.back().wall_time_ms = elapsed_ms(start);
    out.push_back(upper_bound_certificate("duality_h", ham, 1e-8,
                                          "max |H(x, -D_vL) - (v D_vL - L)| over v in [-5, 5]"));
  }
  const auto start = Clock::now();
  std::mt19937_64 rng(derive_seed(seed, 11));
  std::uniform_real_distribution<double> uj(-3.0, 3.0);
  std::uniform_real_distribution<double> um(0.1, 3.0);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  std::uniform_real_distribution<double> ul(0.1, 10.0);
  double fd = 0.0;
  double homog = 0.0;
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < tuples; ++n) {
    const double xx = ux(rng);
    const double j = uj(rng);
    const double m = um(rng);
    const double lam = ul(rng);
    const double j0 = uj(rng);
    const double m0 = um(rng);
    const PerspectiveEval p = model.perspective(xx, j, m);
    const double h = 1e-6;
    const double dj =
        (model.perspective(xx, j + h, m).F - model.perspective(xx, j - h, m).F) / (2.0 * h);
    const double dm =
        (model.perspective(xx, j, m + h).F - model.perspective(xx, j, m - h).F) / (2.0 * h);
    fd = std::max(fd, std::abs(dj - p.Fj) / std::max(1.0, std::abs(p.Fj)));
    fd = std::max(fd, std::abs(dm - p.Fm) / std::max(1.0, std::abs(p.Fm)));
    const double scaled = model.perspective(xx, lam * j, lam * m).F;
    homog = std::max(homog, std::abs(scaled - lam * p.F) / std::max(1.0, std::abs(lam * p.F)));
    slack = std::min(slack, check_subgradient(model, xx, j, m, j0, m0));
  }
  const double ms = elapsed_ms(start);
  out.push_back(upper_bound_certificate("perspective_derivatives", fd, 1e-5,
                                        "relative error of F_j, F_m against centered differences"));
  out.push_back(upper_bound_certificate("perspective_homogeneity", homog, 1e-12,
                                        "max |F(lj, lm) - l F(j, m)| / max(1, |l F|)"));
  out.push_back(lower_bound_certificate("perspective_subgradient", slack, -1e-12,
                                        "min of F(j0, m0) - F_j j0 - F_m m0"));
  for (std::size_t c = out.size() - 3; c < out.size(); ++c) out[c].wall_time_ms = ms / 3.0;
  return out;
}

NodeField random_feasible_field(const FeasibleSet& feasible, std::mt19937_64& rng,
                                double amplitude) {
  const GridSpec& g = feasible.grid();
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  std::vector<double> interior((g.Nt - 1) * (g.Nx - 1));
  for (double& v : interior) v = u(rng);
  feasible.project_potential(interior);
  NodeField psi = make_node_field(g);
  for (std::size_t r = 0; r + 1 < g.Nt; ++r) {
    for (std::size_t k = 1; k < g.Nx; ++k) psi(r + 1, k) = interior[r * (g.Nx - 1) + k - 1];
  }
  return psi;
}

Certificate monotonicity_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                                     std::size_t pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(derive_seed(seed, 21));
  std::uniform_real_distribution<double> amp(0.01, 1.0);
  std::size_t failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < pairs; ++n) {
    const NodeField w1 = random_feasible_field(feasible, rng, amp(rng));
    const NodeField w2 = random_feasible_field(feasible, rng, amp(rng));
    const double gap = monotonicity_gap(cfg, w1, w2);
    const double tol = monotonicity_tolerance(w1, w2);
    if (gap < -tol) ++failures;
    worst = std::min(worst, gap / tol);
  }
  Certificate c = upper_bound_certificate(
      "operator_monotonicity", static_cast<double>(failures), 0.0,
      fmt::format("{} pairs; worst gap / tolerance = {:.3e}", pairs, worst));
  c.wall_time_ms = elapsed_ms(start);
  return c;
}

Certificate gradient_structure_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                                           std::size_t pairs, std::uint64_t seed) {
  const auto start = Clock::now();
  std::mt19937_64 rng(derive_seed(seed, 31));
  double worst = 0.0;
  for (std::size_t n = 0; n < pairs; ++n) {
    const NodeField w = random_feasible_field(feasible, rng, 0.3);
    const NodeField d = difference(random_feasible_field(feasible, rng, 0.3), w);
    const PairingBreakdown p = apply_operator(cfg, w, d);
    const double target = p.perspective + p.regularizer;
    double dmax = 0.0;
    for (double v : d.values()) dmax = std::max(dmax, std::abs(v));
    const double h = 1e-5 / std::max(dmax, 1e-300);
    auto energy = [&](double s) { return perspective_energy(cfg, axpy(w, s * h, d)); };
    // fourth-order five-point difference
    const double deriv =
        (8.0 * (energy(1.0) - energy(-1.0)) - (energy(2.0) - energy(-2.0))) / (12.0 * h);
    worst = std::max(worst, std::abs(deriv - target) / std::max(std::abs(target), 1e-12));
  }
  Certificate c = upper_bound_certificate(
      "gradient_structure", worst, 1e-5,
      fmt::format("{} directions; relative error of dJ against the pairing", pairs));
  c.wall_time_ms = elapsed_ms(start);
  return c;
}

PairingValue vi_pairing(const OperatorConfig& cfg, const NodeField& psi, const NodeField& w) {
  const NodeField r = operator_action(cfg, psi);
  const auto rv = r.values();
  const auto a = w.values();
  const auto b = psi.values();
  std::vector<double> terms(rv.size());
  std::vector<double> mags(rv.size());
  for (std::size_t n = 0; n < rv.size(); ++n) {
    terms[n] = rv[n] * (a[n] - b[n]);
    mags[n] = std::abs(terms[n]);
  }
  return {tree_sum(terms), 1.0 + tree_sum(mags)};
}

Certificate vi_certificate(const OperatorConfig& cfg, const FeasibleSet& feasible,
                           const NodeField& psi, std::size_t samples, std::uint64_t seed,
                           double tol) {
  const auto start = Clock::now();
  std::mt19937_64 rng(derive_seed(seed, 41));
  std::uniform_real_distribution<double> amp(0.01, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < samples; ++n) {
    const PairingValue v = vi_pairing(cfg, psi, random_feasible_field(feasible, rng, amp(rng)));
    worst = std::min(worst, v.value / v.scale);
  }
  Certificate c = lower_bound_certificate(
      "vi_certificate", worst, -tol,
      fmt::format("min over {} feasible w of <A psi, w - psi> / scale", samples));
  c.wall_time_ms = elapsed_ms(start);
  return c;
}

// ---------------------------------------------------------------------------

TestFunctionSpec random_test_function(std::uint64_t seed, TestFamily family, int terms,
                                      double amplitude) {
  if (terms < 1) throw ConfigError("test function needs at least one term");
  std::mt19937_64 rng(derive_seed(seed, 51));
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  TestFunctionSpec spec;
  spec.family = family;
  spec.coefficients.resize(static_cast<std::size_t>(terms * terms));
  for (double& c : spec.coefficients) c = u(rng);
  return spec;
}

NodeField build_test_function(const ReferencePotential& ref, const TestFunctionSpec& spec) {
  const GridSpec& g = ref.grid;
  const auto terms = static_cast<std::size_t>(
      std::lround(std::sqrt(static_cast<double>(spec.coefficients.size()))));
  if (terms == 0 || terms * terms != spec.coefficients.size()) {
    throw ConfigError("test function coefficients must form a square table");
  }
  NodeField bump = make_node_field(g);
  for (std::size_t i = 1; i < g.Nt; ++i) {
    const double t = g.t(i);
    for (std::size_t k = 1; k < g.Nx; ++k) {
      const double x = g.x(k);
      double s = 0.0;
      for (std::size_t a = 0; a < terms; ++a) {
        for (std::size_t b = 0; b < terms; ++b) {
          const double c = spec.coefficients[a * terms + b];
          if (spec.family == TestFamily::PolynomialBump) {
            s += c * std::pow(t / g.T, static_cast<double>(a)) * std::pow(x, static_cast<double>(b));
          } else {
            s += c * std::sin(static_cast<double>(a + 1) * std::numbers::pi * t / g.T) *
                 std::sin(static_cast<double>(b + 1) * std::numbers::pi * x);
          }
        }
      }
      bump(i, k) = spec.family == TestFamily::PolynomialBump ? t * (g.T - t) * x * (1.0 - x) * s : s;
    }
  }
  double scale = 1.0;
  for (int attempt = 0; attempt < 60; ++attempt, scale *= 0.5) {
    NodeField eta = axpy(ref.phi0, scale, bump);
    if (min_cell_dx(g, eta) > 0.0) return eta;
  }
  throw ConfigError("test function admits no scaling with eta_x > 0");
}

MintyValue minty_value(const HamiltonianModel& model, const ReferencePotential& ref,
                       const NodeField& psi, const NodeField& eta) {
  const GridSpec& g = ref.grid;
  NodeField phi = psi;
  {
    auto v = phi.values();
    const auto b = ref.phi0.values();
    for (std::size_t n = 0; n < v.size(); ++n) v[n] += b[n];
  }
  const auto [pt, px] = cell_gradient(g, phi);
  const auto [et, ex] = cell_gradient(g, eta);
  const CellField ebar = cell_average(g, eta);
  const std::size_t n = g.Nt * g.Nx;
  std::vector<double> net(n), mag(n);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      if (!(ex(i, k) > 0.0)) {
        throw ConfigError(fmt::format("test function has eta_x = {} <= 0 at cell ({}, {})",
                                      ex(i, k), i, k));
      }
      const PerspectiveEval p = model.perspective(g.x_mid(k), -et(i, k), ex(i, k));
      const double vol = -p.Fj * et(i, k) + p.Fm * ex(i, k) + ebar(i, k) * ex(i, k);
      const double pair = -p.Fj * pt(i, k) + p.Fm * px(i, k) + ebar(i, k) * px(i, k);
      net[i * g.Nx + k] = vol - pair;
      mag[i * g.Nx + k] = std::abs(vol) + std::abs(pair);
    }
  }
  std::vector<double> left(g.Nt + 1), right(g.Nt + 1);
  for (std::size_t i = 0; i <= g.Nt; ++i) {
    left[i] = phi(i, 0);
    right[i] = 1.0 - phi(i, g.Nx);
  }
  const double lateral = model.lagrangian(0.0, 0.0).L * trapezoid(left, g.dt()) +
                         (model.lagrangian(1.0, 0.0).L + 1.0) * trapezoid(right, g.dt());
  const double W = g.cell_weight();
  return {tree_sum(net) * W - lateral, 1.0 + tree_sum(mag) * W + std::abs(lateral)};
}

Certificate minty_certificate(const HamiltonianModel& model, const ReferencePotential& ref,
                              const NodeField& psi, const TestFunctionSpec& eta,
                              double tol_minty) {
  const auto start = Clock::now();
  const MintyValue v = minty_value(model, ref, psi, build_test_function(ref, eta));
  Certificate c = lower_bound_certificate(
      "minty", v.value, -tol_minty * v.scale,
      fmt::format("{} test function, scale {:.6g}",
                  eta.family == TestFamily::PolynomialBump ? "polynomial" : "fourier", v.scale));
  c.wall_time_ms = elapsed_ms(start);
  return c;
}

// ---------------------------------------------------------------------------

std::vector<Certificate> apriori_certificates(const ReferencePotential& ref,
                                              const std::vector<StageReport>& stages,
                                              double kappa) {
  const GridSpec& g = ref.grid;
  std::vector<Certificate> out;
  std::size_t unconverged = 0;
  std::size_t nonfinite = 0;
  std::vector<double> energies;
  double psi_x = 0.0;
  double psi_t_ratio = 0.0;
  double bv_ratio = 0.0;
  double mass = 0.0;
  double phi0_t_l1 = 0.0;
  for (double v : ref.phi0_t.values()) phi0_t_l1 += std::abs(v);
  phi0_t_l1 *= g.cell_weight();
  for (const StageReport& s : stages) {
    const SolveReport& r = s.report;
    if (!r.converged) ++unconverged;
    if (!std::isfinite(r.kappa_energy) || !std::isfinite(r.bv_bound)) ++nonfinite;
    energies.push_back(r.kappa_energy);
    psi_x = std::max(psi_x, r.psi_x_l1);
    // Young: |j| <= |j|^k / (k m^(k-1)) + (k-1)/k m, with int m = (1 + eps) T
    const double t_bound =
        phi0_t_l1 + r.kappa_energy / kappa + (kappa - 1.0) / kappa * (1.0 + s.eps) * g.T;
    psi_t_ratio = std::max(psi_t_ratio, r.psi_t_l1 / t_bound);
    bv_ratio = std::max(bv_ratio, r.bv_bound / (2.0 * g.T + t_bound));
    mass = std::max(mass, r.row_mass_error);
  }
  out.push_back(upper_bound_certificate("continuation_converged", static_cast<double>(unconverged),
                                        0.0, fmt::format("{} stages", stages.size())));
  out.push_back(upper_bound_certificate("kappa_energy_finite", static_cast<double>(nonfinite), 0.0));
  double spread = std::numeric_limits<double>::infinity();
  if (!energies.empty()) {
    std::vector<double> sorted = energies;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    const double median =
        sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    spread = median > 0.0 ? sorted.back() / median : (sorted.back() > 0.0 ? spread : 1.0);
  }
  out.push_back(upper_bound_certificate("kappa_energy_uniformity", spread, 2.0,
                                        "max over stages / median"));
  out.push_back(upper_bound_certificate("psi_x_l1", psi_x, 2.0 * g.T, "max over stages"));
  out.push_back(upper_bound_certificate("psi_t_l1", psi_t_ratio, 1.0,
                                        "max over stages of |psi_t|_L1 / Young bound"));
  out.push_back(upper_bound_certificate("bv_bound", bv_ratio, 1.0,
                                        "max over stages of bv / (2T + time bound)"));
  out.push_back(upper_bound_certificate("row_mass", mass, 1e-10, "max |row mass - 1|"));
  return out;
}

double fit_log_slope(const std::vector<double>& deltas, const std::vector<double>& masses) {
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < std::min(deltas.size(), masses.size()); ++i) {
    if (!(deltas[i] > 0.0) || !(masses[i] > 0.0)) continue;
    const double lx = std::log(deltas[i]);
    const double ly = std::log(masses[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1.0;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2.0 || den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / den;
}

Certificate trace_scaling_diagnostic(const ReferencePotential& ref, const NodeField& psi,
                                     double kappa, std::vector<double> deltas) {
  const auto start = Clock::now();
  const GridSpec& g = ref.grid;
  if (deltas.empty()) {
    for (double d = g.dt(); d <= 0.5 * g.T * (1.0 + 1e-12); d *= 2.0) deltas.push_back(d);
  }
  const auto [pt, px] = cell_gradient(g, psi);
  std::vector<double> row_mass(g.Nt);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < g.Nx; ++k) s += std::abs(pt(i, k) + ref.phi0_t(i, k));
    row_mass[i] = s * g.cell_weight();
  }
  std::vector<double> widths, masses;
  for (double d : deltas) {
    const auto rows = static_cast<std::size_t>(
        std::clamp(std::llround(d / g.dt()), 1LL, static_cast<long long>(g.Nt)));
    double w = 0.0;
    for (std::size_t r = 0; r < rows; ++r) w += row_mass[g.Nt - 1 - r];
    widths.push_back(static_cast<double>(rows) * g.dt());
    masses.push_back(w);
  }
  const double target = (kappa - 1.0) / kappa - 0.15;
  const auto usable = std::count_if(masses.begin(), masses.end(), [](double m) { return m > 1e-14; });
  Certificate c;
  if (usable < 3) {
    c = {"trace_scaling", true, std::numeric_limits<double>::quiet_NaN(), target,
         fmt::format("inconclusive: {} usable windows", usable), 0.0};
  } else {
    const double slope = fit_log_slope(widths, masses);
    c = lower_bound_certificate("trace_scaling", slope, target,
                                fmt::format("{} windows, fitted log-log slope", usable));
  }
  c.wall_time_ms = elapsed_ms(start);
  return c;
}

// ---------------------------------------------------------------------------

ManufacturedPotential ManufacturedPotential::bump(double T, double alpha) {
  ManufacturedPotential p;
  p.name = fmt::format("bump(alpha={})", alpha);
  p.phi = [=](double t, double x) { return x + alpha * t * (T - t) * x * (1.0 - x); };
  p.phi_t = [=](double t, double x) { return alpha * (T - 2.0 * t) * x * (1.0 - x); };
  p.phi_x = [=](double t, double x) { return 1.0 + alpha * t * (T - t) * (1.0 - 2.0 * x); };
  return p;
}

ManufacturedProblem mms_source(const HamiltonianModel& model, const ReferencePotential& ref,
                               const ManufacturedPotential& star) {
  const GridSpec& g = ref.grid;
  ManufacturedProblem out;
  out.phi_star = make_node_field(g);
  out.psi_star = make_node_field(g);
  for (std::size_t i = 0; i <= g.Nt; ++i) {
    for (std::size_t k = 0; k <= g.Nx; ++k) {
      const double v = star.phi(g.t(i), g.x(k));
      out.phi_star(i, k) = v;
      out.psi_star(i, k) = v - ref.phi0(i, k);
      const bool boundary = i == 0 || k == 0 || i == g.Nt || k == g.Nx;
      if (boundary) {
        if (std::abs(out.psi_star(i, k)) > 1e-12) {
          throw ConfigError(fmt::format("manufactured potential differs from phi0 by {} at node "
                                        "({}, {})",
                                        out.psi_star(i, k), i, k));
        }
        out.psi_star(i, k) = 0.0;
      }
    }
  }
  auto flux = [&](double t, double x) {
    const double m = star.phi_x(t, x);
    if (!(m > 0.0)) {
      throw ConfigError(fmt::format("manufactured potential has phi_x = {} at ({}, {})", m, t, x));
    }
    return model.perspective(x, -star.phi_t(t, x), m);
  };
  out.source = make_cell_field(g);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      const double tm = g.t_mid(i);
      const double xm = g.x_mid(k);
      const double fj_t = (flux(g.t(i + 1), xm).Fj - flux(g.t(i), xm).Fj) / g.dt();
      const double fm_x = (flux(tm, g.x(k + 1)).Fm - flux(tm, g.x(k)).Fm) / g.dx();
      const double phi_x = (star.phi(tm, g.x(k + 1)) - star.phi(tm, g.x(k))) / g.dx();
      out.source(i, k) = fj_t - fm_x - phi_x;
    }
  }
  return out;
}

namespace {

std::vector<double> observed_orders(const std::vector<MmsLevel>& levels,
                                    double MmsLevel::*field) {
  std::vector<double> out;
  for (std::size_t l = 1; l < levels.size(); ++l) {
    const double e0 = levels[l - 1].*field;
    const double e1 = levels[l].*field;
    out.push_back(std::log(e0 / e1) / std::log(levels[l - 1].h / levels[l].h));
  }
  return out;
}

}  // namespace

MmsStudy run_mms_study(const HamiltonianModel& model, const MmsOptions& options) {
  if (options.levels.size() < 2) throw ConfigError("MMS study needs at least two levels");
  const ManufacturedPotential star = ManufacturedPotential::bump(options.T, options.alpha);
  MmsStudy study;
  for (std::size_t n : options.levels) {
    const GridSpec grid = GridSpec::make(options.T, n, n);
    const BoundaryDensities bd = BoundaryDensities::make(
        grid, std::vector<double>(n + 1, 1.0), std::vector<double>(n + 1, 1.0));
    const ReferencePotential ref = build_reference_potential(grid, bd);
    const ManufacturedProblem prob = mms_source(model, ref, star);
    const OperatorConfig cfg =
        OperatorConfig(model, ref, default_q(model), options.eps).with_source(prob.source);
    const FeasibleSet feasible(ref);
    const SolveResult res = solve_vi(cfg, feasible, std::nullopt, options.solver);
    MmsLevel level;
    level.n = n;
    level.h = 1.0 / static_cast<double>(n);
    level.converged = res.report.converged;
    level.iterations = res.report.iterations;
    level.psi_error_l1 = node_l1(grid, difference(res.psi, prob.psi_star));
    const MfpSolution sol = reconstruct_solution(model, ref, res.psi);
    const MfpResiduals resid = mfp_residuals(model, ref, sol, &prob.source);
    level.hj_l1 = resid.hj_norm.l1;
    level.ct_l1 = resid.ct_norm.l1;
    level.linking_linf = linking_consistency(model, sol);
    study.levels.push_back(level);
  }
  study.psi_orders = observed_orders(study.levels, &MmsLevel::psi_error_l1);
  study.hj_orders = observed_orders(study.levels, &MmsLevel::hj_l1);
  study.ct_orders = observed_orders(study.levels, &MmsLevel::ct_l1);
  return study;
}

// ---------------------------------------------------------------------------

void validate_suite_config(const SuiteConfig& config) {
  const GridSpec g = GridSpec::make(config.grid.T, config.grid.Nt, config.grid.Nx);
  const HamiltonianModel model = HamiltonianModel::parse(config.hamiltonian);
  const double l = model.growth().l;
  if (config.q != 0.0 && !(config.q >= l + 1.0)) {
    throw ConfigError(
        fmt::format("regularization exponent q = {} violates q >= l + 1 = {}", config.q, l + 1.0));
  }
  BoundaryDensities::make(g, sample_density(config.m0, g), sample_density(config.mT, g));
  if (config.schedule.empty()) throw ConfigError("empty eps schedule");
  for (std::size_t s = 0; s < config.schedule.size(); ++s) {
    const double e = config.schedule[s];
    if (!(e > 0.0 && e < 1.0)) throw ConfigError(fmt::format("eps {} outside (0, 1)", e));
    if (s > 0 && !(e < config.schedule[s - 1])) {
      throw ConfigError("eps schedule must be strictly decreasing");
    }
  }
  if (!(config.baseline_eps > 0.0 && config.baseline_eps < 1.0)) {
    throw ConfigError(fmt::format("baseline eps {} outside (0, 1)", config.baseline_eps));
  }
  if (!(config.solver.tol > 0.0) || config.solver.max_iter == 0) {
    throw ConfigError("solver needs tol > 0 and max_iter > 0");
  }
  if (!(config.minty_tol > 0.0)) throw ConfigError("minty tolerance must be positive");
}

std::vector<Certificate> mms_certificates(const MmsStudy& study) {
  std::vector<Certificate> out;
  std::size_t unconverged = 0;
  double linking = 0.0;
  for (const auto& l : study.levels) {
    unconverged += l.converged ? 0 : 1;
    linking = std::max(linking, std::isnan(l.linking_linf) ? HUGE_VAL : l.linking_linf);
  }
  out.push_back(upper_bound_certificate("mms_converged", static_cast<double>(unconverged), 0.0,
                                        fmt::format("{} levels", study.levels.size())));
  auto order = [&](const char* name, const std::vector<double>& orders, double MmsLevel::*field) {
    double largest = 0.0;
    for (const auto& l : study.levels) {
      const double v = l.*field;
      largest = std::isnan(v) ? HUGE_VAL : std::max(largest, v);
    }
    if (largest <= kMmsRoundoffFloor) {
      out.push_back(upper_bound_certificate(
          name, largest, kMmsRoundoffFloor,
          "residual at rounding level on every grid; the discrete equation holds identically"));
      return;
    }
    double worst = orders.empty() ? std::nan("") : HUGE_VAL;
    for (double o : orders) worst = std::isnan(o) || std::isnan(worst) ? std::nan("") : std::min(worst, o);
    out.push_back(lower_bound_certificate(name, worst, 1.0, "smallest observed order"));
  };
  order("mms_psi_order", study.psi_orders, &MmsLevel::psi_error_l1);
  order("mms_hj_order", study.hj_orders, &MmsLevel::hj_l1);
  order("mms_ct_order", study.ct_orders, &MmsLevel::ct_l1);
  out.push_back(upper_bound_certificate("mms_linking", linking, 1e-4,
                                        "max over levels, L-infinity over unmasked cells"));
  return out;
}

namespace {

/// Runs one block of checks; an exception becomes a failed certificate.
template <class Fn>
void guarded(std::vector<Certificate>& out, const std::string& name, Fn&& fn) {
  const auto start = Clock::now();
  try {
    fn();
  } catch (const std::exception& e) {
    Certificate c{name, false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                  fmt::format("error: {}", e.what()), 0.0};
    c.wall_time_ms = elapsed_ms(start);
    out.push_back(std::move(c));
  }
}

}  // namespace

std::vector<Certificate> run_suite(const SuiteConfig& config) {
  validate_suite_config(config);
  const HamiltonianModel model = HamiltonianModel::parse(config.hamiltonian);
  const double kappa = model.growth().kappa;
  const double q = config.q != 0.0 ? config.q : default_q(model);
  const GridSpec grid = config.grid;
  const ReferencePotential ref = build_reference_potential(
      grid,
      BoundaryDensities::make(grid, sample_density(config.m0, grid), sample_density(config.mT, grid)));
  const FeasibleSet feasible(ref);
  std::vector<Certificate> out;

  guarded(out, "identities", [&] {
    for (auto& c : identity_certificates(model, config.seed)) out.push_back(std::move(c));
  });

  guarded(out, "operator_properties", [&] {
    const GridSpec small = GridSpec::make(grid.T, 8, 8);
    const ReferencePotential ref8 = build_reference_potential(
        small, BoundaryDensities::make(small, sample_density(config.m0, small),
                                       sample_density(config.mT, small)));
    const FeasibleSet fs8(ref8);
    const OperatorConfig cfg8(model, ref8, q, config.schedule.back());
    out.push_back(monotonicity_certificate(cfg8, fs8, config.monotonicity_pairs, config.seed));
    out.push_back(gradient_structure_certificate(cfg8, fs8, 20, config.seed));
  });

  guarded(out, "regularized_solve", [&] {
    const OperatorConfig cfg(model, ref, q, config.baseline_eps);
    auto start = Clock::now();
    const SolveResult res = solve_vi(cfg, feasible, std::nullopt, config.solver);
    Certificate conv = upper_bound_certificate(
        "vi_converged", res.report.final_residual, config.solver.tol,
        fmt::format("eps {}, {} iterations", config.baseline_eps, res.report.iterations));
    conv.passed = conv.passed && res.report.converged;
    conv.wall_time_ms = elapsed_ms(start);
    out.push_back(conv);
    out.push_back(vi_certificate(cfg, feasible, res.psi, config.vi_samples, config.seed));

    start = Clock::now();
    std::mt19937_64 rng(derive_seed(config.seed, 61));
    const NodeField init = random_feasible_field(feasible, rng, 0.5);
    const SolveResult other =
        solve_vi(cfg, feasible, SolveState::from_psi(grid, init), config.solver);
    Certificate agree = upper_bound_certificate(
        "two_start_agreement", node_l1(grid, difference(res.psi, other.psi)),
        10.0 * config.solver.tol, "discrete L1 distance of zero- and random-start solutions");
    agree.passed = agree.passed && other.report.converged;
    agree.wall_time_ms = elapsed_ms(start);
    out.push_back(agree);
  });

  NodeField final_psi;
  bool have_final = false;
  guarded(out, "continuation", [&] {
    const auto start = Clock::now();
    const OperatorConfig base(model, ref, q, config.schedule.front());
    const ContinuationResult cont = continuation(base, feasible, config.schedule, config.solver);
    auto certs = apriori_certificates(ref, cont.stages, kappa);
    certs.front().wall_time_ms = elapsed_ms(start);
    for (auto& c : certs) out.push_back(std::move(c));
    final_psi = cont.psi;
    have_final = cont.completed;
  });

  if (have_final) {
    for (std::size_t n = 0; n < config.minty_tests; ++n) {
      guarded(out, "minty", [&] {
        const TestFamily family = n % 2 ? TestFamily::FourierBump : TestFamily::PolynomialBump;
        const TestFunctionSpec spec = random_test_function(derive_seed(config.seed, 100 + n), family);
        Certificate c = minty_certificate(model, ref, final_psi, spec, config.minty_tol);
        c.name = fmt::format("minty_{:02}", n);
        out.push_back(std::move(c));
      });
    }
    guarded(out, "trace_scaling",
            [&] { out.push_back(trace_scaling_diagnostic(ref, final_psi, kappa)); });
  } else {
    out.push_back({"minty", false, std::numeric_limits<double>::quiet_NaN(), 0.0,
                   "skipped: continuation did not complete", 0.0});
  }

  if (config.run_mms) {
    guarded(out, "mms", [&] {
      const auto start = Clock::now();
      const MmsStudy study = run_mms_study(model, config.mms);
      const double ms = elapsed_ms(start);
      auto certs = mms_certificates(study);
      certs.front().wall_time_ms = ms;
      for (auto& c : certs) out.push_back(std::move(c));
    });
  }
  return out;
}

}  // namespace rmfp
