#include <cmath>
#include <random>

#include <doctest.h>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"
#include "rmfp/vi_operator.hpp"

using namespace rmfp;

namespace {

ReferencePotential make_ref(std::size_t n, const char* mT = "sin-bump(0.4)") {
  const auto g = GridSpec::make(1.0, n, n);
  return build_reference_potential(
      g, BoundaryDensities::make(g, sample_density("uniform", g), sample_density(mT, g)));
}

// small zero-boundary noise; |w_x| stays well below min phi0_x = 0.6
NodeField noise(const GridSpec& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-amp, amp);
  NodeField f = make_node_field(g);
  for (std::size_t i = 1; i < g.Nt; ++i)
    for (std::size_t k = 1; k < g.Nx; ++k) f(i, k) = U(rng);
  return f;
}

struct Diff {
  double t, x, avg;
};

Diff diff(const GridSpec& g, const NodeField& f, std::size_t i, std::size_t k) {
  const double a = f(i, k), b = f(i, k + 1), c = f(i + 1, k), d = f(i + 1, k + 1);
  return {(c + d - a - b) / (2 * g.dt()), (b + d - a - c) / (2 * g.dx()), (a + b + c + d) / 4};
}

// Hand pairing for H = p^2/2, where F(j, m) = j^2 / (2m).
double quadratic_pairing(const ReferencePotential& ref, double q, double eps, const NodeField& w,
                         const NodeField& z) {
  const auto& g = ref.grid;
  double s = 0.0;
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      const Diff dw = diff(g, w, i, k), dz = diff(g, z, i, k), dp = diff(g, ref.phi0, i, k);
      const double jj = -dw.t - dp.t;
      const double mm = dw.x + dp.x + eps;
      double cell = -(jj / mm) * dz.t - 0.5 * (jj * jj) / (mm * mm) * dz.x;
      cell += (dw.avg + dp.avg) * dz.x;
      const double gn = std::hypot(dw.t, dw.x);
      cell += eps * std::pow(gn, q - 2) * (dw.t * dz.t + dw.x * dz.x);
      cell += eps * std::pow(std::abs(dw.avg), q - 2) * dw.avg * dz.avg;
      s += cell;
    }
  }
  return s * g.cell_weight();
}

double dot(const NodeField& a, const NodeField& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a.values()[n] * b.values()[n];
  return s;
}

}  // namespace

TEST_CASE("pairing matches a hand-written quadratic stencil") {
  const auto ref = make_ref(6);
  const auto h = HamiltonianModel::quadratic();
  std::mt19937_64 rng(3);
  for (double q : {3.0, 4.5}) {
    const OperatorConfig cfg(h, ref, q, 0.1);
    for (int rep = 0; rep < 5; ++rep) {
      const NodeField w = noise(ref.grid, rng, 0.02);
      const NodeField z = noise(ref.grid, rng, 1.0);
      const auto pb = apply_operator(cfg, w, z);
      CHECK(pb.total == doctest::Approx(quadratic_pairing(ref, q, 0.1, w, z)).epsilon(1e-12));
      CHECK(pb.forcing == 0.0);
    }
  }
}

TEST_CASE("node representation reproduces the pairing") {
  const auto ref = make_ref(7);
  std::mt19937_64 rng(11);
  for (const auto& h : {HamiltonianModel::quadratic(), HamiltonianModel::power_law(3.0),
                        HamiltonianModel::mixed_quartic(0.5)}) {
    const OperatorConfig cfg(h, ref, default_q(h), 0.05);
    const NodeField w = noise(ref.grid, rng, 0.02);
    const NodeField r = operator_action(cfg, w);
    for (std::size_t k = 0; k <= ref.grid.Nx; ++k) CHECK(r(0, k) == 0.0);
    for (int rep = 0; rep < 3; ++rep) {
      const NodeField z = noise(ref.grid, rng, 1.0);
      CHECK(dot(r, z) == doctest::Approx(apply_operator(cfg, w, z).total).epsilon(1e-11));
    }
  }
}

TEST_CASE("forcing pairs against cell averages") {
  const auto ref = make_ref(4);
  const auto h = HamiltonianModel::quadratic();
  CellField src = make_cell_field(ref.grid, 2.0);
  const OperatorConfig base(h, ref, 3.0, 0.1);
  const OperatorConfig cfg = base.with_source(src);
  NodeField z = make_node_field(ref.grid);
  z(2, 2) = 1.0;  // four cells each see avg 1/4
  const NodeField w = make_node_field(ref.grid);
  const auto pb = apply_operator(cfg, w, z);
  CHECK(pb.forcing == doctest::Approx(-2.0 * 4 * 0.25 * ref.grid.cell_weight()));
  CHECK(operator_action(cfg, w)(2, 2) == doctest::Approx(pb.total));
}

TEST_CASE("ranking term is skew on zero-boundary fields") {
  const auto ref = make_ref(8);
  const auto h = HamiltonianModel::quadratic();
  const OperatorConfig cfg(h, ref, 3.0, 0.1);
  const NodeField zero = make_node_field(ref.grid);
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const NodeField a = noise(ref.grid, rng, 0.02);
    const NodeField b = noise(ref.grid, rng, 0.02);
    const double bab = apply_operator(cfg, a, b).ranking - apply_operator(cfg, zero, b).ranking;
    const double bba = apply_operator(cfg, b, a).ranking - apply_operator(cfg, zero, a).ranking;
    CHECK(std::abs(bab + bba) <= 1e-15);
    const double baa = apply_operator(cfg, a, a).ranking - apply_operator(cfg, zero, a).ranking;
    CHECK(std::abs(baa) <= 1e-15);
  }
}

TEST_CASE("monotone on random pairs") {
  const auto ref = make_ref(8);
  std::mt19937_64 rng(17);
  for (const auto& h : {HamiltonianModel::quadratic(), HamiltonianModel::power_law(1.5)}) {
    const OperatorConfig cfg(h, ref, default_q(h), 0.01);
    for (int rep = 0; rep < 100; ++rep) {
      const NodeField a = noise(ref.grid, rng, 0.05);
      const NodeField b = noise(ref.grid, rng, 0.05);
      CHECK(monotonicity_gap(cfg, a, b) >= -monotonicity_tolerance(a, b));
    }
  }
}

TEST_CASE("energy derivative equals the perspective and regularizer pairing") {
  const auto ref = make_ref(6);
  std::mt19937_64 rng(23);
  const auto h = HamiltonianModel::power_law(3.0);
  const OperatorConfig cfg(h, ref, default_q(h), 0.1);
  for (int rep = 0; rep < 5; ++rep) {
    const NodeField w = noise(ref.grid, rng, 0.02);
    const NodeField d = noise(ref.grid, rng, 0.02);
    auto E = [&](double s) {
      NodeField x = w;
      for (std::size_t n = 0; n < x.size(); ++n) x.values()[n] += s * d.values()[n];
      return perspective_energy(cfg, x);
    };
    const double hs = 1e-3;
    const double fd = (8 * (E(hs) - E(-hs)) - (E(2 * hs) - E(-2 * hs))) / (12 * hs);
    const auto pb = apply_operator(cfg, w, d);
    CHECK(fd == doctest::Approx(pb.perspective + pb.regularizer).epsilon(1e-7));
  }
}

TEST_CASE("validation") {
  const auto ref = make_ref(4);
  const auto h = HamiltonianModel::quadratic();
  CHECK_THROWS_AS(OperatorConfig(h, ref, 2.5, 0.1), ConfigError);  // q < l + 1
  CHECK_THROWS_AS(OperatorConfig(h, ref, 3.0, 0.0), ConfigError);
  CHECK_THROWS_AS(OperatorConfig(h, ref, 3.0, 1.0), ConfigError);
  CHECK(default_q(h) == 3.0);
  CHECK(default_q(HamiltonianModel::power_law(1.5)) == doctest::Approx(4.0));

  const OperatorConfig cfg(h, ref, 3.0, 0.1);
  NodeField w = make_node_field(ref.grid);
  w(2, 1) = 1.0;  // drives the mass of cell (2, 1) or (1, 1) far below zero
  try {
    apply_operator(cfg, w, w);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("cell (") != std::string::npos);
  }
  NodeField bad = make_node_field(ref.grid);
  bad(0, 2) = 0.1;
  CHECK_THROWS_AS(apply_operator(cfg, bad, bad), DomainError);
}

TEST_CASE("energy is midpoint convex") {
  const auto ref = make_ref(8);
  std::mt19937_64 rng(17);
  for (const char* spec : {"quadratic", "power(1.5)", "power(3)"}) {
    const auto h = HamiltonianModel::parse(spec);
    const OperatorConfig cfg(h, ref, default_q(h), 0.05);
    for (int r = 0; r < 50; ++r) {
      const NodeField a = noise(ref.grid, rng, 0.05);
      const NodeField b = noise(ref.grid, rng, 0.05);
      NodeField mid = a;
      for (std::size_t n = 0; n < mid.size(); ++n)
        mid.values()[n] = 0.5 * (a.values()[n] + b.values()[n]);
      const double ja = perspective_energy(cfg, a), jb = perspective_energy(cfg, b);
      INFO(spec);
      CHECK(perspective_energy(cfg, mid) <= 0.5 * ja + 0.5 * jb + 1e-12);
    }
  }
}
