#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"
#include "rmfp/solver.hpp"

using namespace rmfp;

namespace {

ReferencePotential make_ref(std::size_t n, const char* mT = "sin-bump(0.4)") {
  const auto g = GridSpec::make(1.0, n, n);
  return build_reference_potential(
      g, BoundaryDensities::make(g, sample_density("uniform", g), sample_density(mT, g)));
}

double dist2(const std::vector<double>& a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (a[n] - b[n]) * (a[n] - b[n]);
  return s;
}

// Brute force over active sets: each candidate is the projection onto the
// affine hull of a face; the nearest feasible candidate is the projection.
std::vector<double> brute_feasible(const std::vector<double>& lb, const std::vector<double>& c) {
  const std::size_t n = lb.size();
  std::vector<double> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    double fixed = 0.0, free_sum = 0.0;
    std::size_t nfree = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (mask & (1u << k)) fixed += lb[k];
      else { free_sum += c[k]; ++nfree; }
    }
    if (nfree == 0) continue;
    const double shift = (free_sum + fixed) / static_cast<double>(nfree);
    std::vector<double> g(n);
    bool ok = true;
    for (std::size_t k = 0; k < n; ++k) {
      g[k] = (mask & (1u << k)) ? lb[k] : c[k] - shift;
      ok = ok && g[k] >= lb[k] - 1e-14;
    }
    if (ok && dist2(g, c) < best_d) {
      best_d = dist2(g, c);
      best = g;
    }
  }
  return best;
}

// Same idea for interior node values; active edges glue neighbouring nodes
// into chains, a chain touching the boundary is pinned, others take the mean.
std::vector<double> brute_potential(const std::vector<double>& lb, const std::vector<double>& c) {
  const std::size_t N = lb.size();  // nodes 0..N, interior 1..N-1
  std::vector<double> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << N); ++mask) {
    std::vector<double> psi(N + 1, 0.0);
    bool ok = true;
    std::size_t start = 0;
    while (start <= N && ok) {
      std::size_t end = start;
      while (end < N && (mask & (1u << end))) ++end;
      // chain start..end, offsets relative to start
      std::vector<double> off(end - start + 1, 0.0);
      for (std::size_t k = start; k < end; ++k) off[k - start + 1] = off[k - start] + lb[k];
      double base;
      if (start == 0) {
        base = 0.0;
        if (end == N && std::abs(off.back()) > 1e-12) ok = false;
      } else if (end == N) {
        base = -off.back();
      } else {
        double s = 0.0;
        for (std::size_t k = start; k <= end; ++k) s += c[k - 1] - off[k - start];
        base = s / static_cast<double>(end - start + 1);
      }
      for (std::size_t k = start; k <= end; ++k) psi[k] = base + off[k - start];
      start = end + 1;
    }
    if (!ok) continue;
    for (std::size_t k = 0; k < N; ++k) ok = ok && psi[k + 1] - psi[k] >= lb[k] - 1e-12;
    if (!ok) continue;
    std::vector<double> inner(psi.begin() + 1, psi.end() - 1);
    if (dist2(inner, c) < best_d) {
      best_d = dist2(inner, c);
      best = inner;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("projection of a two-entry row") {
  const auto g = project_feasible(std::vector<double>{-0.5, -0.5}, std::vector<double>{1.0, 0.0});
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(-0.5));
  const auto h = project_feasible(std::vector<double>{-0.5, -0.5}, std::vector<double>{3.0, 0.0});
  CHECK(h[0] == doctest::Approx(0.5));
  CHECK(h[1] == doctest::Approx(-0.5));
  CHECK_THROWS_AS(project_feasible(std::vector<double>{0.1, 0.0}, std::vector<double>{0.0, 0.0}),
                  ConfigError);
}

TEST_CASE("row projections agree with active-set enumeration") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> L(-0.6, 0.0), C(-1.5, 1.5);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 3 + rep % 3;
    std::vector<double> lb(n), c(n), ci(n - 1);
    for (auto& v : lb) v = L(rng);
    for (auto& v : c) v = C(rng);
    for (auto& v : ci) v = C(rng);

    const auto g = project_feasible(lb, c);
    const auto ref = brute_feasible(lb, c);
    for (std::size_t k = 0; k < n; ++k) CHECK(g[k] == doctest::Approx(ref[k]).epsilon(1e-10));
    const auto again = project_feasible(lb, g);
    for (std::size_t k = 0; k < n; ++k) CHECK(again[k] == doctest::Approx(g[k]).epsilon(1e-12));

    const auto p = project_potential_row(lb, ci);
    const auto pref = brute_potential(lb, ci);
    REQUIRE(pref.size() == p.size());
    for (std::size_t k = 0; k + 1 < n; ++k) CHECK(p[k] == doctest::Approx(pref[k]).epsilon(1e-10));
  }
}

TEST_CASE("difference and potential coordinates round-trip") {
  const auto ref = make_ref(5);
  const FeasibleSet fs(ref);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  std::vector<double> g(fs.rows() * fs.cols());
  for (auto& v : g) v = U(rng);
  fs.project(g);
  const NodeField psi = psi_from_differences(ref.grid, g);
  CHECK(fs.contains(psi));
  const auto back = differences_from_psi(ref.grid, psi);
  for (std::size_t n = 0; n < g.size(); ++n) CHECK(back[n] == doctest::Approx(g[n]).epsilon(1e-12));
  for (std::size_t i = 0; i <= ref.grid.Nt; ++i) CHECK(std::abs(psi(i, ref.grid.Nx)) < 1e-14);

  NodeField bad = psi;
  bad(2, 1) = -5.0;
  CHECK_FALSE(fs.contains(bad));
}

TEST_CASE("regularized solve on 8x8") {
  const auto ref = make_ref(8);
  const auto h = HamiltonianModel::quadratic();
  const OperatorConfig cfg(h, ref, 3.0, 0.1);
  const FeasibleSet fs(ref);
  SolverOptions opt;
  opt.tol = 1e-10;
  opt.trace_stride = 10;
  const SolveResult res = solve_vi(cfg, fs, std::nullopt, opt);
  REQUIRE(res.report.converged);
  CHECK(res.report.final_residual <= 1e-10);
  CHECK(fs.contains(res.psi));
  CHECK(res.report.row_mass_error <= 1e-12);
  CHECK(res.report.psi_x_l1 <= 2.0);
  const auto& tr = res.report.residual_trace;
  for (std::size_t n = 1; n < tr.size(); ++n) CHECK(tr[n] <= tr[n - 1]);

  // Minty-style spot check of the VI at random feasible points
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(-0.3, 0.3);
  for (int s = 0; s < 50; ++s) {
    std::vector<double> inner((ref.grid.Nt - 1) * (ref.grid.Nx - 1));
    for (auto& v : inner) v = U(rng);
    fs.project_potential(inner);
    NodeField d = make_node_field(ref.grid);
    for (std::size_t i = 1; i < ref.grid.Nt; ++i)
      for (std::size_t k = 1; k < ref.grid.Nx; ++k)
        d(i, k) = inner[(i - 1) * (ref.grid.Nx - 1) + k - 1] - res.psi(i, k);
    const auto pb = apply_operator(cfg, res.psi, d);
    const NodeField r = operator_action(cfg, res.psi);
    double scale = 1.0;
    for (std::size_t n = 0; n < r.size(); ++n) scale += std::abs(r.values()[n] * d.values()[n]);
    CHECK(pb.total >= -1e-6 * scale);
  }

  // warm restart from the converged state stops immediately
  SolverOptions loose = opt;
  loose.tol = 1e-8;
  const SolveResult warm = solve_vi(cfg, fs, res.state, loose);
  CHECK(warm.report.converged);
  CHECK(warm.report.iterations <= 1);

  // the slower coordinates reach the same point
  SolverOptions diffs = opt;
  diffs.coordinates = SolverCoordinates::Differences;
  diffs.tol = 1e-9;
  diffs.max_iter = 400000;
  const SolveResult alt = solve_vi(cfg, fs, std::nullopt, diffs);
  REQUIRE(alt.report.converged);
  NodeField delta = alt.psi;
  for (std::size_t n = 0; n < delta.size(); ++n) delta.values()[n] -= res.psi.values()[n];
  CHECK(node_l1(ref.grid, delta) <= 1e-6);
}

TEST_CASE("nonconvergence and stagnation") {
  const auto ref = make_ref(6);
  const auto h = HamiltonianModel::quadratic();
  const OperatorConfig cfg(h, ref, 3.0, 0.1);
  const FeasibleSet fs(ref);
  SolverOptions opt;
  opt.tol = 1e-14;
  opt.max_iter = 5;
  const SolveResult res = solve_vi(cfg, fs, std::nullopt, opt);
  CHECK_FALSE(res.report.converged);
  CHECK(res.report.iterations == 5);
  CHECK(fs.contains(res.psi));

  SolverOptions tight;
  tight.theta = 1e-30;
  CHECK_THROWS_AS(solve_vi(cfg, fs, std::nullopt, tight), StagnationError);

  SolverOptions bad;
  bad.theta = 1.5;
  CHECK_THROWS_AS(solve_vi(cfg, fs, std::nullopt, bad), ConfigError);
}

TEST_CASE("continuation") {
  const auto ref = make_ref(8);
  const auto h = HamiltonianModel::quadratic();
  const OperatorConfig base(h, ref, 3.0, 0.3);
  const FeasibleSet fs(ref);
  SolverOptions opt;
  opt.tol = 1e-10;

  const auto single = continuation(base, fs, {0.2}, opt);
  CHECK(single.completed);
  REQUIRE(single.stages.size() == 1);
  const SolveResult direct = solve_vi(base.with_eps(0.2), fs, std::nullopt, opt);
  CHECK(single.psi == direct.psi);

  const auto chained = continuation(base, fs, {0.3, 0.1, 0.05}, opt, true);
  const auto cold = continuation(base, fs, {0.3, 0.1, 0.05}, opt, false);
  REQUIRE(chained.completed);
  REQUIRE(cold.completed);
  NodeField delta = chained.psi;
  for (std::size_t n = 0; n < delta.size(); ++n) delta.values()[n] -= cold.psi.values()[n];
  CHECK(node_l1(ref.grid, delta) <= 1e-7);

  SolverOptions starved = opt;
  starved.max_iter = 3;
  const auto partial = continuation(base, fs, {0.3, 0.1}, starved);
  CHECK_FALSE(partial.completed);
  REQUIRE(partial.failed_stage.has_value());
  CHECK(*partial.failed_stage == 0);
  CHECK(partial.stages.size() == 1);

  CHECK_THROWS_AS(continuation(base, fs, {0.1, 0.2}, opt), ConfigError);
  CHECK_THROWS_AS(continuation(base, fs, {}, opt), ConfigError);
  CHECK_THROWS_AS(continuation(base, fs, {1.0}, opt), ConfigError);
}
