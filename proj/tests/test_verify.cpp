#include <cmath>
#include <string>

#include <doctest.h>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"
#include "rmfp/verify.hpp"

using namespace rmfp;

namespace {

ReferencePotential make_ref(std::size_t n, const char* m0, const char* mT, double T = 1.0) {
  const auto g = GridSpec::make(T, n, n);
  return build_reference_potential(
      g, BoundaryDensities::make(g, sample_density(m0, g), sample_density(mT, g)));
}

// Pointwise source of the forced equation for H = p^2/2 and
// phi = x + a t (T - t) x (1 - x), differentiated by hand.
double source_exact(double a, double T, double t, double x) {
  const double A = a * (T - 2 * t) * x * (1 - x);
  const double B = 1 + a * t * (T - t) * (1 - 2 * x);
  const double At = -2 * a * x * (1 - x);
  const double Bt = a * (T - 2 * t) * (1 - 2 * x);
  const double Ax = a * (T - 2 * t) * (1 - 2 * x);
  const double Bx = -2 * a * t * (T - t);
  const double v = A / B;
  return -(At * B - A * Bt) / (B * B) + v * (Ax * B - A * Bx) / (B * B) - B;
}

}  // namespace

TEST_CASE("identity certificates pass for the shipped models") {
  for (const char* spec : {"quadratic", "power(1.5)", "power(3)", "mixed-quartic(0.5)"}) {
    const auto h = HamiltonianModel::parse(spec);
    for (const auto& c : identity_certificates(h, 9, 200)) {
      INFO(spec << " " << c.name << " " << c.measured);
      CHECK(c.passed);
    }
  }
}

TEST_CASE("certificate comparisons") {
  CHECK(upper_bound_certificate("a", 1.0, 2.0).passed);
  CHECK_FALSE(upper_bound_certificate("a", 3.0, 2.0).passed);
  CHECK(lower_bound_certificate("b", -1e-6, -1e-5).passed);
  CHECK_FALSE(lower_bound_certificate("b", -1e-4, -1e-5).passed);
  CHECK_FALSE(upper_bound_certificate("nan", NAN, 1.0).passed);
}

TEST_CASE("manufactured source") {
  const auto h = HamiltonianModel::quadratic();
  SUBCASE("phi* = phi0 leaves only the ranking term") {
    const auto ref = make_ref(8, "uniform", "uniform");
    const auto prob = mms_source(h, ref, ManufacturedPotential::bump(1.0, 0.0));
    for (double v : prob.source.values()) CHECK(v == doctest::Approx(-1.0));
    for (double v : prob.psi_star.values()) CHECK(v == 0.0);
  }
  SUBCASE("agrees with the hand-differentiated source") {
    const double a = 0.1;
    std::vector<double> err;
    for (std::size_t n : {16, 32}) {
      const auto ref = make_ref(n, "uniform", "uniform");
      const auto prob = mms_source(h, ref, ManufacturedPotential::bump(1.0, a));
      double e = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
          e = std::max(e, std::abs(prob.source(i, k) -
                                   source_exact(a, 1.0, ref.grid.t_mid(i), ref.grid.x_mid(k))));
      err.push_back(e);
    }
    CHECK(err[1] <= 1e-3);
    CHECK(err[0] / err[1] >= 3.5);
  }
  SUBCASE("boundary mismatch is rejected") {
    const auto ref = make_ref(8, "uniform", "sin-bump(0.3)");
    CHECK_THROWS_AS(mms_source(h, ref, ManufacturedPotential::bump(1.0, 0.5)), ConfigError);
  }
}

TEST_CASE("minty value vanishes when the test function is the solution") {
  const auto ref = make_ref(10, "uniform", "sin-bump(0.3)");
  const auto h = HamiltonianModel::power_law(3.0);
  const auto eta = build_test_function(ref, random_test_function(4, TestFamily::FourierBump));
  NodeField psi = eta;
  for (std::size_t n = 0; n < psi.size(); ++n) psi.values()[n] -= ref.phi0.values()[n];
  const auto v = minty_value(h, ref, psi, eta);
  CHECK(std::abs(v.value) <= 1e-13 * v.scale);

  NodeField flat = make_node_field(ref.grid);  // eta_x = 0 everywhere
  CHECK_THROWS_AS(minty_value(h, ref, psi, flat), ConfigError);
}

TEST_CASE("test functions are admissible") {
  const auto ref = make_ref(12, "gauss(0.3,0.2)", "uniform");
  for (auto fam : {TestFamily::PolynomialBump, TestFamily::FourierBump}) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const auto spec = random_test_function(s, fam, 3, 4.0);
      CHECK(spec.coefficients.size() == 9);
      const NodeField eta = build_test_function(ref, spec);
      const auto [et, ex] = cell_gradient(ref.grid, eta);
      for (double v : ex.values()) CHECK(v > 0.0);
      for (std::size_t k = 0; k <= ref.grid.Nx; ++k) {
        CHECK(eta(0, k) == doctest::Approx(ref.phi0(0, k)));
        CHECK(eta(ref.grid.Nt, k) == doctest::Approx(ref.phi0(ref.grid.Nt, k)));
      }
    }
  }
}

TEST_CASE("log slope fit") {
  const std::vector<double> d{0.01, 0.02, 0.04, 0.08};
  std::vector<double> m;
  for (double x : d) m.push_back(3.0 * std::pow(x, 0.7));
  CHECK(fit_log_slope(d, m) == doctest::Approx(0.7));
}

TEST_CASE("trace diagnostic is inconclusive for a stationary state") {
  const auto ref = make_ref(16, "uniform", "uniform");
  const auto c = trace_scaling_diagnostic(ref, make_node_field(ref.grid), 2.0);
  CHECK(c.passed);
  CHECK(c.details.find("inconclusive") != std::string::npos);
}

TEST_CASE("operator certificates on a small problem") {
  const auto ref = make_ref(8, "uniform", "sin-bump(0.4)");
  const auto h = HamiltonianModel::quadratic();
  const OperatorConfig cfg(h, ref, 3.0, 0.05);
  const FeasibleSet fs(ref);
  CHECK(monotonicity_certificate(cfg, fs, 50, 1).passed);
  CHECK(gradient_structure_certificate(cfg, fs, 5, 1).passed);

  // negative control: an unconverged iterate fails the VI certificate
  SolverOptions starved;
  starved.max_iter = 2;
  starved.tol = 1e-14;
  const auto rough = solve_vi(cfg, fs, std::nullopt, starved);
  CHECK_FALSE(vi_certificate(cfg, fs, rough.psi, 50, 3).passed);

  SolverOptions opt;
  opt.tol = 1e-10;
  const auto good = solve_vi(cfg, fs, std::nullopt, opt);
  REQUIRE(good.report.converged);
  CHECK(vi_certificate(cfg, fs, good.psi, 50, 3).passed);
  CHECK(minty_certificate(h, ref, good.psi,
                          random_test_function(2, TestFamily::PolynomialBump)).passed);
}

TEST_CASE("random feasible fields are feasible and seeded") {
  const auto ref = make_ref(6, "gauss(0.5,0.2)", "uniform");
  const FeasibleSet fs(ref);
  std::mt19937_64 a(5), b(5);
  const NodeField fa = random_feasible_field(fs, a, 2.0);
  CHECK(fs.contains(fa));
  CHECK(fa == random_feasible_field(fs, b, 2.0));
}

TEST_CASE("suite config validation") {
  SuiteConfig cfg;
  cfg.q = 2.0;  // q = l for the quadratic model
  CHECK_THROWS_AS(validate_suite_config(cfg), ConfigError);
  cfg.q = 0.0;
  cfg.m0 = "gauss(0.5,-1)";
  CHECK_THROWS_AS(validate_suite_config(cfg), ConfigError);
  cfg.m0 = "uniform";
  cfg.hamiltonian = "power(0.5)";
  CHECK_THROWS_AS(validate_suite_config(cfg), ConfigError);
  cfg.hamiltonian = "quadratic";
  CHECK_NOTHROW(validate_suite_config(cfg));
}

TEST_CASE("MMS certificates") {
  MmsStudy st;
  for (std::size_t n : {16, 32, 64}) {
    MmsLevel l;
    l.n = n;
    l.h = 1.0 / n;
    l.converged = true;
    l.psi_error_l1 = 1.0 / (n * n);
    l.hj_l1 = 3.0 / n;
    l.ct_l1 = 1e-15 * n * n;  // rounding noise that grows under refinement
    l.linking_linf = 1e-6 / n;
    st.levels.push_back(l);
  }
  st.psi_orders = {2.0, 2.0};
  st.hj_orders = {1.0, 1.0};
  st.ct_orders = {-2.0, -2.0};
  auto certs = mms_certificates(st);
  for (const auto& c : certs) {
    INFO(c.name);
    CHECK(c.passed);
  }

  st.levels[2].hj_l1 = st.levels[1].hj_l1;  // stalls above the floor
  st.hj_orders[1] = 0.0;
  st.levels[0].linking_linf = 2e-4;  // coarse level counts too
  st.levels[1].converged = false;
  certs = mms_certificates(st);
  for (const char* name : {"mms_converged", "mms_hj_order", "mms_linking"}) {
    bool found = false;
    for (const auto& c : certs)
      if (c.name == name) {
        found = true;
        CHECK_FALSE(c.passed);
      }
    CHECK(found);
  }
}
