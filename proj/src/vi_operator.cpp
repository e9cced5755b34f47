#include "rmfp/vi_operator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "rmfp/errors.hpp"
#include "rmfp/parallel.hpp"

namespace rmfp {

OperatorConfig::OperatorConfig(const HamiltonianModel& model, const ReferencePotential& ref,
                               double q, double eps)
    : model_(&model), ref_(&ref), q_(q), eps_(eps) {
  const double l = model.growth().l;
  if (!(q >= l + 1.0)) {
    throw ConfigError(fmt::format("regularization exponent q = {} violates q >= l + 1 = {}", q,
                                  l + 1.0));
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw ConfigError(fmt::format("regularization eps = {} must lie in (0, 1)", eps));
  }
}

OperatorConfig OperatorConfig::unregularized(const HamiltonianModel& model,
                                             const ReferencePotential& ref) {
  OperatorConfig cfg;
  cfg.model_ = &model;
  cfg.ref_ = &ref;
  cfg.q_ = default_q(model);
  cfg.eps_ = 0.0;
  return cfg;
}

OperatorConfig OperatorConfig::with_eps(double eps) const {
  OperatorConfig cfg(*model_, *ref_, q_, eps);
  cfg.source_ = source_;
  return cfg;
}

OperatorConfig OperatorConfig::with_source(const CellField& source) const {
  if (source.rows() != grid().Nt || source.cols() != grid().Nx) {
    throw ConfigError("source field does not match the grid");
  }
  OperatorConfig cfg = *this;
  cfg.source_ = &source;
  return cfg;
}

double default_q(const HamiltonianModel& model) { return std::max(3.0, model.growth().l + 1.0); }

PerspectiveEval shifted_perspective(const HamiltonianModel& model, const ReferencePotential& ref,
                                    std::size_t i, std::size_t k, double j, double m, double eps) {
  const double mass = m + ref.phi0_x(i, k) + eps;
  if (!(mass > 0.0)) {
    throw DomainError(
        fmt::format("nonpositive shifted mass {} at cell ({}, {})", mass, i, k));
  }
  const PerspectiveEval p = model.perspective(ref.grid.x_mid(k), -j - ref.phi0_t(i, k), mass);
  return {p.F, -p.Fj, p.Fm, true};
}

namespace {

/// Stencil quantities of a node field on one cell.
struct CellStencil {
  double t;
  double x;
  double avg;
};

inline CellStencil stencil(const NodeField& f, std::size_t i, std::size_t k, double inv2dt,
                           double inv2dx) {
  const double a = f(i, k);
  const double b = f(i, k + 1);
  const double c = f(i + 1, k);
  const double d = f(i + 1, k + 1);
  return {(c + d - a - b) * inv2dt, (b + d - a - c) * inv2dx, 0.25 * (a + b + c + d)};
}

/// |s|^(q-2) with the common q = 3 case kept off std::pow.
inline double power_qm2(double s, double q) {
  const double a = std::abs(s);
  if (q == 3.0) return a;
  if (q == 4.0) return a * a;
  return a == 0.0 ? 0.0 : std::pow(a, q - 2.0);
}

/// Operator coefficients at one cell: <A w, zeta> restricted to the cell is
/// W (ct zeta_t + cx zeta_x + c0 avg(zeta)).
struct CellCoefficients {
  double Ft;    // F~
  double Fjt;   // F~_j
  double Fmt;   // F~_m
  double rank;  // avg(w) + avg(phi0)
  double reg_t;
  double reg_x;
  double reg_0;
  double src;
  double grad_q;  // |grad w|^q
  double avg_q;   // |avg w|^q
};

inline CellCoefficients coefficients(const OperatorConfig& cfg, const NodeField& w, std::size_t i,
                                     std::size_t k, double inv2dt, double inv2dx) {
  const ReferencePotential& ref = cfg.ref();
  const CellStencil s = stencil(w, i, k, inv2dt, inv2dx);
  const double eps = cfg.eps();
  const double mass = s.x + ref.phi0_x(i, k) + eps;
  if (!(mass > 0.0)) {
    throw DomainError(
        fmt::format("nonpositive shifted mass {} at cell ({}, {})", mass, i, k));
  }
  const PerspectiveEval p =
      cfg.model().perspective(ref.grid.x_mid(k), -s.t - ref.phi0_t(i, k), mass);
  CellCoefficients c{};
  c.Ft = p.F;
  c.Fjt = -p.Fj;
  c.Fmt = p.Fm;
  c.rank = s.avg + ref.phi0_avg(i, k);
  if (eps > 0.0) {
    const double q = cfg.q();
    const double gn = std::sqrt(s.t * s.t + s.x * s.x);
    const double gp = power_qm2(gn, q);
    const double ap = power_qm2(s.avg, q);
    c.reg_t = eps * gp * s.t;
    c.reg_x = eps * gp * s.x;
    c.reg_0 = eps * ap * s.avg;
    c.grad_q = gp * gn * gn;
    c.avg_q = ap * s.avg * s.avg;
  }
  if (const CellField* src = cfg.source()) c.src = (*src)(i, k);
  return c;
}

void require_zero_boundary(const GridSpec& g, const NodeField& f, const char* what) {
  if (f.rows() != g.Nt + 1 || f.cols() != g.Nx + 1) {
    throw DomainError(fmt::format("{} does not match the grid", what));
  }
  for (std::size_t k = 0; k <= g.Nx; ++k) {
    if (f(0, k) != 0.0 || f(g.Nt, k) != 0.0) {
      throw DomainError(fmt::format("{} must vanish on the boundary (node ({}, {}) / ({}, {}))",
                                    what, 0, k, g.Nt, k));
    }
  }
  for (std::size_t i = 0; i <= g.Nt; ++i) {
    if (f(i, 0) != 0.0 || f(i, g.Nx) != 0.0) {
      throw DomainError(fmt::format("{} must vanish on the boundary (row {})", what, i));
    }
  }
}

}  // namespace

PairingBreakdown apply_operator(const OperatorConfig& cfg, const NodeField& w,
                                const NodeField& zeta) {
  const GridSpec& g = cfg.grid();
  require_zero_boundary(g, w, "w");
  require_zero_boundary(g, zeta, "zeta");
  const double inv2dt = 0.5 / g.dt();
  const double inv2dx = 0.5 / g.dx();
  const std::size_t n = g.Nt * g.Nx;
  std::vector<double> persp(n), rank(n), reg(n), force(n);
  parallel_for(g.Nt, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t k = 0; k < g.Nx; ++k) {
        const CellCoefficients c = coefficients(cfg, w, i, k, inv2dt, inv2dx);
        const CellStencil z = stencil(zeta, i, k, inv2dt, inv2dx);
        const std::size_t idx = i * g.Nx + k;
        persp[idx] = c.Fjt * z.t + c.Fmt * z.x;
        rank[idx] = c.rank * z.x;
        reg[idx] = c.reg_0 * z.avg + c.reg_t * z.t + c.reg_x * z.x;
        force[idx] = -c.src * z.avg;
      }
    }
  });
  const double W = g.cell_weight();
  PairingBreakdown out;
  out.perspective = tree_sum(persp) * W;
  out.ranking = tree_sum(rank) * W;
  out.regularizer = tree_sum(reg) * W;
  out.forcing = tree_sum(force) * W;
  out.total = out.perspective + out.ranking + out.regularizer + out.forcing;
  return out;
}

NodeField operator_action(const OperatorConfig& cfg, const NodeField& w) {
  const GridSpec& g = cfg.grid();
  const double inv2dt = 0.5 / g.dt();
  const double inv2dx = 0.5 / g.dx();
  const double W = g.cell_weight();
  CellField at = make_cell_field(g);
  CellField ax = make_cell_field(g);
  CellField a0 = make_cell_field(g);
  parallel_for(g.Nt, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t k = 0; k < g.Nx; ++k) {
        const CellCoefficients c = coefficients(cfg, w, i, k, inv2dt, inv2dx);
        at(i, k) = W * (c.Fjt + c.reg_t) * inv2dt;
        ax(i, k) = W * (c.Fmt + c.rank + c.reg_x) * inv2dx;
        a0(i, k) = 0.25 * W * (c.reg_0 - c.src);
      }
    }
  });
  NodeField r = make_node_field(g);
  parallel_for(g.Nt - 1, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b + 1; i < e + 1; ++i) {
      for (std::size_t k = 1; k < g.Nx; ++k) {
        // node (i, k) is the lower-left, upper-left, lower-right and upper-right
        // corner of cells (i, k), (i-1, k), (i, k-1) and (i-1, k-1)
        r(i, k) = (-at(i, k) - ax(i, k) + a0(i, k)) + (at(i - 1, k) - ax(i - 1, k) + a0(i - 1, k)) +
                  (-at(i, k - 1) + ax(i, k - 1) + a0(i, k - 1)) +
                  (at(i - 1, k - 1) + ax(i - 1, k - 1) + a0(i - 1, k - 1));
      }
    }
  });
  return r;
}

double perspective_energy(const OperatorConfig& cfg, const NodeField& w) {
  const GridSpec& g = cfg.grid();
  require_zero_boundary(g, w, "w");
  const double inv2dt = 0.5 / g.dt();
  const double inv2dx = 0.5 / g.dx();
  std::vector<double> terms(g.Nt * g.Nx);
  const double reg_scale = cfg.eps() / cfg.q();
  parallel_for(g.Nt, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      for (std::size_t k = 0; k < g.Nx; ++k) {
        const CellCoefficients c = coefficients(cfg, w, i, k, inv2dt, inv2dx);
        terms[i * g.Nx + k] = c.Ft + reg_scale * (c.avg_q + c.grad_q);
      }
    }
  });
  return tree_sum(terms) * g.cell_weight();
}

double monotonicity_gap(const OperatorConfig& cfg, const NodeField& w1, const NodeField& w2) {
  NodeField d = w1;
  const auto a = w2.values();
  auto out = d.values();
  for (std::size_t n = 0; n < out.size(); ++n) out[n] -= a[n];
  return apply_operator(cfg, w1, d).total - apply_operator(cfg, w2, d).total;
}

double monotonicity_tolerance(const NodeField& w1, const NodeField& w2) {
  auto norm = [](const NodeField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v * v;
    return std::sqrt(s);
  };
  const double s = 1.0 + norm(w1) + norm(w2);
  return 1e-10 * s * s;
}

}  // namespace rmfp
