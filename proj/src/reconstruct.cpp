#include "rmfp/reconstruct.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rmfp/errors.hpp"
#include "rmfp/parallel.hpp"

namespace rmfp {
namespace {

/// int_0^x f over a cell row, evaluated at the cell centers.
std::vector<double> cumulative_to_centers(std::span<const double> row, double dx) {
  std::vector<double> out(row.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = acc + 0.5 * dx * row[k];
    acc += dx * row[k];
  }
  return out;
}

void accumulate(ResidualNorms& n, double v, double weight) {
  n.l1 += std::abs(v) * weight;
  n.linf = std::max(n.linf, std::abs(v));
}

}  // namespace

MfpSolution reconstruct_solution(const HamiltonianModel& model, const ReferencePotential& ref,
                                 const NodeField& psi) {
  const GridSpec& g = ref.grid;
  if (psi.rows() != g.Nt + 1 || psi.cols() != g.Nx + 1) {
    throw DomainError("psi does not match the grid");
  }
  MfpSolution sol;
  sol.grid = g;
  sol.phi = psi;
  {
    auto out = sol.phi.values();
    const auto base = ref.phi0.values();
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += base[n];
  }
  std::tie(sol.flux, sol.m) = cell_gradient(g, sol.phi);

  sol.masked.assign(g.Nt * g.Nx, 0);
  for (std::size_t n = 0; n < sol.masked.size(); ++n) {
    if (sol.m.values()[n] <= kDensityFloor) {
      sol.masked[n] = 1;
      ++sol.masked_count;
    }
  }
  if (5 * sol.masked_count > sol.masked.size()) {
    throw DegenerateDensityError(fmt::format("{} of {} cells have density below {}",
                                             sol.masked_count, sol.masked.size(), kDensityFloor));
  }

  CellField Fj = make_cell_field(g);
  CellField Fm = make_cell_field(g);
  parallel_for(g.Nt, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t k = 0; k < g.Nx; ++k) {
        if (sol.masked[i * g.Nx + k]) continue;
        const PerspectiveEval p = model.perspective(g.x_mid(k), -sol.flux(i, k), sol.m(i, k));
        Fj(i, k) = p.Fj;
        Fm(i, k) = p.Fm;
      }
    }
  });

  sol.u = make_node_field(g);
  for (std::size_t i = 0; i < g.Nt; ++i) sol.u(i + 1, 0) = sol.u(i, 0) - Fm(i, 0) * g.dt();
  // Row differences d_i = u(i, k+1) - u(i, k) of one column. The cell stencil
  // of u_x averages d_i and d_{i+1}, so u_x = -F_j on every cell fixes d up to
  // an alternating mode (-1)^i c; c is the least-squares fit to the node-row
  // interpolant of F_j (row means, linear extrapolation at t = 0, T).
  std::vector<double> d(g.Nt + 1), target(g.Nt + 1);
  for (std::size_t k = 0; k < g.Nx; ++k) {
    for (std::size_t i = 0; i <= g.Nt; ++i) {
      double fj;
      if (i == 0) {
        fj = 1.5 * Fj(0, k) - 0.5 * Fj(1, k);
      } else if (i == g.Nt) {
        fj = 1.5 * Fj(g.Nt - 1, k) - 0.5 * Fj(g.Nt - 2, k);
      } else {
        fj = 0.5 * (Fj(i - 1, k) + Fj(i, k));
      }
      target[i] = -fj * g.dx();
    }
    d[0] = 0.0;
    for (std::size_t i = 0; i < g.Nt; ++i) d[i + 1] = -2.0 * g.dx() * Fj(i, k) - d[i];
    double c = 0.0;
    for (std::size_t i = 0; i <= g.Nt; ++i) c += (i % 2 ? -1.0 : 1.0) * (target[i] - d[i]);
    c /= static_cast<double>(g.Nt + 1);
    for (std::size_t i = 0; i <= g.Nt; ++i) {
      sol.u(i, k + 1) = sol.u(i, k) + d[i] + (i % 2 ? -c : c);
    }
  }
  return sol;
}

MfpResiduals mfp_residuals(const HamiltonianModel& model, const ReferencePotential& ref,
                           const MfpSolution& sol, const CellField* source) {
  const GridSpec& g = sol.grid;
  if (!(g == ref.grid)) throw DomainError("solution and reference potential use different grids");
  if (source && (source->rows() != g.Nt || source->cols() != g.Nx)) {
    throw DomainError("source field does not match the grid");
  }
  const auto [ut, ux] = cell_gradient(g, sol.u);
  const double dt = g.dt();
  const double dx = g.dx();
  const double W = g.cell_weight();

  MfpResiduals res;
  res.hj = make_cell_field(g);
  CellField flux = make_cell_field(g);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    const auto mass = cumulative_to_centers(sol.m.row(i), dx);
    std::vector<double> forced(g.Nx, 0.0);
    if (source) forced = cumulative_to_centers(source->row(i), dx);
    for (std::size_t k = 0; k < g.Nx; ++k) {
      const HamiltonianEval h = model.eval(g.x_mid(k), ux(i, k));
      flux(i, k) = sol.m(i, k) * h.DpH;
      if (sol.masked[i * g.Nx + k]) continue;
      res.hj(i, k) = -ut(i, k) + h.H - mass[k] - forced[k];
      accumulate(res.hj_norm, res.hj(i, k), W);
    }
  }

  res.ct = make_node_field(g);
  auto masked = [&](std::size_t i, std::size_t k) { return sol.masked[i * g.Nx + k] != 0; };
  for (std::size_t i = 1; i < g.Nt; ++i) {
    for (std::size_t k = 1; k < g.Nx; ++k) {
      if (masked(i, k) || masked(i - 1, k) || masked(i, k - 1) || masked(i - 1, k - 1)) continue;
      const double mt =
          0.5 * ((sol.m(i, k - 1) - sol.m(i - 1, k - 1)) + (sol.m(i, k) - sol.m(i - 1, k))) / dt;
      const double fx =
          0.5 * ((flux(i - 1, k) - flux(i - 1, k - 1)) + (flux(i, k) - flux(i, k - 1))) / dx;
      res.ct(i, k) = mt - fx;
      accumulate(res.ct_norm, res.ct(i, k), W);
    }
  }

  res.flux_bc.reserve(g.Nt);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    const double left = flux(i, 0);
    const double right = flux(i, g.Nx - 1);
    res.flux_bc.emplace_back(left, right);
    accumulate(res.flux_bc_norm, left, dt);
    accumulate(res.flux_bc_norm, right, dt);
  }

  const auto& m0 = ref.densities.m0;
  const auto& mT = ref.densities.mT;
  res.planning_bc0.resize(g.Nx);
  res.planning_bcT.resize(g.Nx);
  for (std::size_t k = 0; k < g.Nx; ++k) {
    res.planning_bc0[k] = sol.m(0, k) - 0.5 * (m0[k] + m0[k + 1]);
    res.planning_bcT[k] = sol.m(g.Nt - 1, k) - 0.5 * (mT[k] + mT[k + 1]);
    accumulate(res.planning_norm, res.planning_bc0[k], dx);
    accumulate(res.planning_norm, res.planning_bcT[k], dx);
  }
  return res;
}

double linking_consistency(const HamiltonianModel& model, const MfpSolution& sol) {
  const GridSpec& g = sol.grid;
  const auto [ut, ux] = cell_gradient(g, sol.u);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      if (sol.masked[i * g.Nx + k]) continue;
      const double drift = model.eval(g.x_mid(k), ux(i, k)).DpH;
      worst = std::max(worst, std::abs(drift - sol.flux(i, k) / sol.m(i, k)));
    }
  }
  return worst;
}

double euler_identity_defect(const HamiltonianModel& model, const MfpSolution& sol) {
  const GridSpec& g = sol.grid;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      if (sol.masked[i * g.Nx + k]) continue;
      const double j = -sol.flux(i, k);
      const double m = sol.m(i, k);
      const PerspectiveEval p = model.perspective(g.x_mid(k), j, m);
      worst = std::max(worst, std::abs(p.Fj * j + p.Fm * m - p.F));
    }
  }
  return worst;
}

}  // namespace rmfp
