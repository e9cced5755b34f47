#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "rmfp/errors.hpp"
#include "rmfp/hamiltonian.hpp"

using namespace rmfp;

namespace {

// sup_p (-v p - H(p)) by golden section on a bracket wide enough for |v| <= 5.
double golden_sup(const HamiltonianModel& model, double v, double lo = -50.0, double hi = 50.0) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  auto f = [&](double p) { return -v * p - model.eval(0.3, p).H; };
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - r * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + r * (b - a); fd = f(d);
    }
  }
  return f(0.5 * (a + b));
}

// Real root of p + b p^3 + v = 0.
double cardano_root(double b, double v) {
  const double P = 1.0 / b, Q = v / b;
  const double s = std::sqrt(Q * Q / 4.0 + P * P * P / 27.0);
  return std::cbrt(-Q / 2.0 + s) + std::cbrt(-Q / 2.0 - s);
}

}  // namespace

TEST_CASE("quadratic closed forms") {
  const auto h = HamiltonianModel::quadratic();
  CHECK(h.eval(0.1, 3.0).H == doctest::Approx(4.5));
  CHECK(h.eval(0.1, -3.0).DpH == doctest::Approx(-3.0));
  const auto le = h.lagrangian(0.2, 1.5);
  CHECK(le.L == doctest::Approx(1.125));
  CHECK(le.DvL == doctest::Approx(1.5));
  CHECK(le.argmax_p == doctest::Approx(-1.5));
  // F = j^2 / (2m)
  const auto pe = h.perspective(0.5, 0.6, 0.3);
  CHECK(pe.F == doctest::Approx(0.6));
  CHECK(pe.Fj == doctest::Approx(2.0));
  CHECK(pe.Fm == doctest::Approx(-2.0));
  CHECK(h.growth().c >= 2.0);
}

TEST_CASE("power law matches |v|^a'/a' and the golden-section sup") {
  for (double a : {1.5, 3.0}) {
    const auto h = HamiltonianModel::power_law(a);
    const double ac = a / (a - 1.0);
    CHECK(h.growth().l == doctest::Approx(ac));
    for (double v : {-2.5, -0.4, 0.0, 0.7, 3.0}) {
      const auto le = h.lagrangian(0.0, v);
      CHECK(le.L == doctest::Approx(std::pow(std::abs(v), ac) / ac).epsilon(1e-12));
      CHECK(le.L == doctest::Approx(golden_sup(h, v)).epsilon(1e-7));
    }
  }
}

TEST_CASE("mixed quartic Lagrangian against Cardano") {
  const double b = 0.5;
  const auto h = HamiltonianModel::mixed_quartic(b);
  CHECK(h.kind() == HamiltonianKind::Numeric);
  for (double v : {-40.0, -3.0, -0.2, 0.0, 0.01, 1.0, 7.5, 100.0}) {
    const double p = cardano_root(b, v);
    const double L = -v * p - 0.5 * p * p - 0.25 * b * p * p * p * p;
    const auto le = h.lagrangian(0.4, v);
    CHECK(le.argmax_p == doctest::Approx(p).epsilon(1e-10));
    CHECK(le.DvL == doctest::Approx(-p).epsilon(1e-10));
    CHECK(le.L == doctest::Approx(L).epsilon(1e-10));
  }
  CHECK(h.lagrangian(0.0, 2.0).L == doctest::Approx(golden_sup(h, 2.0)).epsilon(1e-7));
}

TEST_CASE("duality identities on a 200-point grid") {
  for (const auto& h : {HamiltonianModel::quadratic(), HamiltonianModel::power_law(1.5),
                        HamiltonianModel::power_law(3.0), HamiltonianModel::mixed_quartic(0.5)}) {
    double worst1 = 0.0, worst2 = 0.0;
    for (int n = 0; n < 200; ++n) {
      const double v = -5.0 + 10.0 * n / 199.0;
      const auto le = h.lagrangian(0.5, v);
      const auto he = h.eval(0.5, -le.DvL);
      worst1 = std::max(worst1, std::abs(he.DpH + v));
      // L(v) = v D_vL - H(-D_vL)
      worst2 = std::max(worst2, std::abs(le.L + he.H - v * le.DvL) / (1.0 + std::abs(le.L)));
    }
    INFO(h.name());
    CHECK(worst1 <= 1e-8);
    CHECK(worst2 <= 1e-8);
  }
}

TEST_CASE("perspective derivatives, homogeneity and subgradient slack") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> J(-3.0, 3.0), M(0.05, 3.0), S(0.1, 10.0);
  for (const auto& h : {HamiltonianModel::quadratic(), HamiltonianModel::power_law(1.5),
                        HamiltonianModel::power_law(3.0), HamiltonianModel::mixed_quartic(0.5)}) {
    INFO(h.name());
    for (int n = 0; n < 100; ++n) {
      const double j = J(rng), m = M(rng);
      const auto pe = h.perspective(0.5, j, m);
      const double hj = 1e-6 * (1.0 + std::abs(j)), hm = 1e-6 * m;
      const double fj = (h.perspective(0.5, j + hj, m).F - h.perspective(0.5, j - hj, m).F) / (2 * hj);
      const double fm = (h.perspective(0.5, j, m + hm).F - h.perspective(0.5, j, m - hm).F) / (2 * hm);
      CHECK(std::abs(fj - pe.Fj) <= 1e-5 * (1.0 + std::abs(pe.Fj)));
      CHECK(std::abs(fm - pe.Fm) <= 1e-5 * (1.0 + std::abs(pe.Fm)));
      const double s = S(rng);
      CHECK(std::abs(h.perspective(0.5, s * j, s * m).F - s * pe.F) <=
            1e-12 * (1.0 + std::abs(s * pe.F)));
      // Euler: F = F_j j + F_m m for a one-homogeneous function
      CHECK(std::abs(pe.Fj * j + pe.Fm * m - pe.F) <= 1e-10 * (1.0 + std::abs(pe.F)));
      CHECK(check_subgradient(h, 0.5, j, m, J(rng), M(rng)) >= -1e-12);
    }
  }
}

TEST_CASE("perspective at zero mass") {
  const auto h = HamiltonianModel::quadratic();
  const auto z = h.perspective(0.0, 0.0, 0.0);
  CHECK(z.F == 0.0);
  CHECK_FALSE(z.derivatives_defined);
  CHECK(std::isnan(z.Fj));
  CHECK(std::isinf(h.perspective(0.0, 0.1, 0.0).F));
  CHECK_THROWS_AS(h.perspective(0.0, 0.1, -1e-3), DomainError);
  CHECK_THROWS_AS(h.perspective(0.0, std::numeric_limits<double>::quiet_NaN(), 1.0), DomainError);
}

TEST_CASE("shifted perspective flips the flux partial") {
  const auto h = HamiltonianModel::quadratic();
  // F(x, -j - a, m + b + eps) with j = 0.2, a = 0.3, m = 0.1, b = 0.9, eps = 0.05
  const auto s = shifted_perspective(h, 0.5, 0.3, 0.9, 0.2, 0.1, 0.05);
  const double jj = -0.5, mm = 1.05;
  CHECK(s.F == doctest::Approx(jj * jj / (2 * mm)));
  CHECK(s.Fj == doctest::Approx(-jj / mm));
  CHECK(s.Fm == doctest::Approx(-0.5 * jj * jj / (mm * mm)));
  CHECK_THROWS_AS(shifted_perspective(h, 0.5, 0.0, -1.0, 0.0, 0.0, 0.05), DomainError);
}

TEST_CASE("growth envelope holds beyond the fitted sample") {
  for (const auto& h : {HamiltonianModel::quadratic(), HamiltonianModel::power_law(1.5),
                        HamiltonianModel::power_law(3.0), HamiltonianModel::mixed_quartic(0.5)}) {
    const auto g = h.growth();
    INFO(h.name());
    for (double v : {-1e3, -17.0, -0.3, 0.0, 2e-4, 1.1, 60.0, 5e3}) {
      const auto le = h.lagrangian(0.5, v);
      CHECK(std::abs(le.DvL) <= g.c * std::pow(std::abs(v), g.l - 1.0) + g.c);
      CHECK(le.L >= std::pow(std::abs(v), g.kappa) / g.c - g.c);
    }
  }
}

TEST_CASE("parse") {
  CHECK(HamiltonianModel::parse("quadratic").kind() == HamiltonianKind::Quadratic);
  CHECK(HamiltonianModel::parse("power(3)").exponent() == 3.0);
  CHECK(HamiltonianModel::parse("mixed-quartic(0.5)").kind() == HamiltonianKind::Numeric);
  CHECK_THROWS_AS(HamiltonianModel::parse("cubic"), ConfigError);
  CHECK_THROWS_AS(HamiltonianModel::parse("power(1)"), ConfigError);
  CHECK_THROWS_AS(HamiltonianModel::parse("power(2x)"), ConfigError);
  CHECK_THROWS_AS(HamiltonianModel::parse("power(2"), ConfigError);
  CHECK_THROWS_AS(HamiltonianModel::parse("mixed-quartic(-1)"), ConfigError);
}
