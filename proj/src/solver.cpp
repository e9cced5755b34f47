#include "rmfp/solver.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "rmfp/errors.hpp"
#include "rmfp/parallel.hpp"

namespace rmfp {

std::vector<double> project_feasible(std::span<const double> lower_bounds,
                                     std::span<const double> candidate) {
  const std::size_t n = candidate.size();
  if (lower_bounds.size() != n || n == 0) {
    throw ConfigError("projection row and bounds differ in length");
  }
  double sum_lb = 0.0;
  for (double v : lower_bounds) sum_lb += v;
  if (sum_lb > 0.0) {
    throw ConfigError(fmt::format("empty feasible row: lower bounds sum to {} > 0", sum_lb));
  }
  std::vector<double> brk(n);
  for (std::size_t k = 0; k < n; ++k) brk[k] = candidate[k] - lower_bounds[k];
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return brk[a] > brk[b]; });

  // sum_k max(v_k - lambda, lb_k) = 0 is piecewise linear and nonincreasing in
  // lambda; walk the breakpoints from the top until the root falls in a piece.
  double active_v = 0.0;
  double inactive_lb = sum_lb;
  double lambda = brk[order[0]];
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t idx = order[j - 1];
    active_v += candidate[idx];
    inactive_lb -= lower_bounds[idx];
    lambda = (active_v + inactive_lb) / static_cast<double>(j);
    const double next = j < n ? brk[order[j]] : -std::numeric_limits<double>::infinity();
    if (lambda >= next) break;
  }
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = std::max(candidate[k] - lambda, lower_bounds[k]);
  return out;
}

std::vector<double> project_potential_row(std::span<const double> lower_bounds,
                                          std::span<const double> interior) {
  const std::size_t n = lower_bounds.size();
  if (n < 2 || interior.size() != n - 1) {
    throw ConfigError("potential row and bounds differ in length");
  }
  std::vector<double> offset(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) offset[k + 1] = offset[k] - lower_bounds[k];
  const double top = offset[n];
  if (top < 0.0) {
    throw ConfigError(fmt::format("empty feasible row: lower bounds sum to {} > 0", -top));
  }
  // pool adjacent violators on chi = psi + offset
  std::vector<double> level;
  std::vector<std::size_t> count;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    level.push_back(interior[k] + offset[k + 1]);
    count.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] > level.back()) {
      const std::size_t c = count.back();
      const double v = level.back();
      level.pop_back();
      count.pop_back();
      level.back() = (level.back() * static_cast<double>(count.back()) + v * static_cast<double>(c)) /
                     static_cast<double>(count.back() + c);
      count.back() += c;
    }
  }
  std::vector<double> out;
  out.reserve(n - 1);
  for (std::size_t b = 0; b < level.size(); ++b) {
    const double v = std::clamp(level[b], 0.0, top);
    for (std::size_t c = 0; c < count[b]; ++c) out.push_back(v - offset[out.size() + 1]);
  }
  return out;
}

FeasibleSet::FeasibleSet(const ReferencePotential& ref) : grid_(ref.grid) {
  const GridSpec& g = grid_;
  lower_.resize((g.Nt - 1) * g.Nx);
  for (std::size_t r = 0; r + 1 < g.Nt; ++r) {
    const std::size_t i = r + 1;
    for (std::size_t k = 0; k < g.Nx; ++k) {
      lower_[r * g.Nx + k] = -(ref.phi0(i, k + 1) - ref.phi0(i, k));
    }
  }
  phi0_x_ = ref.phi0_x;
}

void FeasibleSet::project(std::span<double> g) const {
  parallel_for(rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      auto row = g.subspan(r * cols(), cols());
      const auto p = project_feasible(lower_bounds(r), row);
      std::copy(p.begin(), p.end(), row.begin());
    }
  });
}

void FeasibleSet::project_potential(std::span<double> interior) const {
  const std::size_t w = cols() - 1;
  parallel_for(rows(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      auto row = interior.subspan(r * w, w);
      const auto p = project_potential_row(lower_bounds(r), row);
      std::copy(p.begin(), p.end(), row.begin());
    }
  });
}

bool FeasibleSet::contains(const NodeField& w, double tol) const {
  const GridSpec& g = grid_;
  if (w.rows() != g.Nt + 1 || w.cols() != g.Nx + 1) return false;
  for (std::size_t k = 0; k <= g.Nx; ++k) {
    if (w(0, k) != 0.0 || w(g.Nt, k) != 0.0) return false;
  }
  for (std::size_t i = 0; i <= g.Nt; ++i) {
    if (w(i, 0) != 0.0 || w(i, g.Nx) != 0.0) return false;
  }
  const auto [wt, wx] = cell_gradient(g, w);
  for (std::size_t i = 0; i < g.Nt; ++i) {
    for (std::size_t k = 0; k < g.Nx; ++k) {
      if (wx(i, k) + phi0_x_(i, k) < -tol) return false;
    }
  }
  return true;
}

NodeField psi_from_differences(const GridSpec& grid, std::span<const double> g) {
  NodeField psi = make_node_field(grid);
  for (std::size_t r = 0; r + 1 < grid.Nt; ++r) {
    const std::size_t i = r + 1;
    double acc = 0.0;
    for (std::size_t k = 1; k < grid.Nx; ++k) {
      acc += g[r * grid.Nx + k - 1];
      psi(i, k) = acc;
    }
  }
  return psi;
}

std::vector<double> differences_from_psi(const GridSpec& grid, const NodeField& psi) {
  std::vector<double> g((grid.Nt - 1) * grid.Nx);
  for (std::size_t r = 0; r + 1 < grid.Nt; ++r) {
    for (std::size_t k = 0; k < grid.Nx; ++k) {
      g[r * grid.Nx + k] = psi(r + 1, k + 1) - psi(r + 1, k);
    }
  }
  return g;
}

SolveState SolveState::zero(const GridSpec& grid) {
  SolveState s;
  s.g.assign((grid.Nt - 1) * grid.Nx, 0.0);
  return s;
}

SolveState SolveState::from_psi(const GridSpec& grid, const NodeField& psi) {
  SolveState s;
  s.g = differences_from_psi(grid, psi);
  return s;
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double diff_norm(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    const double d = a[n] - b[n];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Operator in difference coordinates: the prefix-sum adjoint (row suffix sums)
/// of the node action at psi = P g.
void transformed_operator(const OperatorConfig& cfg, std::span<const double> g,
                          std::vector<double>& out) {
  const GridSpec& grid = cfg.grid();
  const NodeField r = operator_action(cfg, psi_from_differences(grid, g));
  out.resize(g.size());
  for (std::size_t row = 0; row + 1 < grid.Nt; ++row) {
    const std::size_t i = row + 1;
    double acc = 0.0;
    out[row * grid.Nx + grid.Nx - 1] = 0.0;
    for (std::size_t k = grid.Nx - 1; k >= 1; --k) {
      acc += r(i, k);
      out[row * grid.Nx + k - 1] = acc;
    }
  }
}

std::vector<double> interior_from_psi(const GridSpec& grid, const NodeField& psi) {
  std::vector<double> v((grid.Nt - 1) * (grid.Nx - 1));
  for (std::size_t r = 0; r + 1 < grid.Nt; ++r) {
    for (std::size_t k = 1; k < grid.Nx; ++k) v[r * (grid.Nx - 1) + k - 1] = psi(r + 1, k);
  }
  return v;
}

NodeField psi_from_interior(const GridSpec& grid, std::span<const double> v) {
  NodeField psi = make_node_field(grid);
  for (std::size_t r = 0; r + 1 < grid.Nt; ++r) {
    for (std::size_t k = 1; k < grid.Nx; ++k) psi(r + 1, k) = v[r * (grid.Nx - 1) + k - 1];
  }
  return psi;
}

void step(std::span<const double> g, double tau, std::span<const double> dir,
          std::vector<double>& out) {
  out.resize(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) out[n] = g[n] - tau * dir[n];
}

}  // namespace

double node_l1(const GridSpec& grid, const NodeField& f) {
  std::vector<double> a(f.size());
  const auto v = f.values();
  for (std::size_t n = 0; n < v.size(); ++n) a[n] = std::abs(v[n]);
  return tree_sum(a) * grid.cell_weight();
}

SolveReport evaluate_report(const OperatorConfig& cfg, const NodeField& psi) {
  const GridSpec& g = cfg.grid();
  const ReferencePotential& ref = cfg.ref();
  const double kappa = cfg.model().growth().kappa;
  const auto [pt, px] = cell_gradient(g, psi);
  const std::size_t n = g.Nt * g.Nx;
  std::vector<double> abs_t(n), abs_x(n), kap(n);
  double min_density = std::numeric_limits<double>::infinity();
  double row_err = 0.0;
  double left = 0.0;
  double right = 0.0;
  for (std::size_t i = 0; i < g.Nt; ++i) {
    double row_mass = 0.0;
    for (std::size_t k = 0; k < g.Nx; ++k) {
      const std::size_t idx = i * g.Nx + k;
      const double m = px(i, k) + ref.phi0_x(i, k);
      const double flux = pt(i, k) + ref.phi0_t(i, k);
      abs_t[idx] = std::abs(pt(i, k));
      abs_x[idx] = std::abs(px(i, k));
      kap[idx] = std::pow(std::abs(flux), kappa) / std::pow(m + cfg.eps(), kappa - 1.0);
      min_density = std::min(min_density, m);
      row_mass += m;
    }
    row_err = std::max(row_err, std::abs(row_mass * g.dx() - 1.0));
    left += px(i, 0) + ref.phi0_x(i, 0);
    right += px(i, g.Nx - 1) + ref.phi0_x(i, g.Nx - 1);
  }
  SolveReport rep;
  rep.eps = cfg.eps();
  const double W = g.cell_weight();
  rep.psi_t_l1 = tree_sum(abs_t) * W;
  rep.psi_x_l1 = tree_sum(abs_x) * W;
  rep.bv_bound = rep.psi_t_l1 + rep.psi_x_l1;
  rep.kappa_energy = tree_sum(kap) * W;
  rep.min_density = min_density;
  rep.row_mass_error = row_err;
  rep.pileup_left = left / static_cast<double>(g.Nt);
  rep.pileup_right = right / static_cast<double>(g.Nt);
  return rep;
}

SolveResult solve_vi(const OperatorConfig& cfg, const FeasibleSet& feasible,
                     std::optional<SolveState> init, const SolverOptions& options) {
  const GridSpec& grid = cfg.grid();
  if (!(grid == feasible.grid())) throw ConfigError("feasible set built on a different grid");
  if (!(options.tol > 0.0) || !(options.theta > 0.0 && options.theta < 1.0) ||
      !(options.tau0 > 0.0)) {
    throw ConfigError("solver needs tol > 0, theta in (0, 1) and tau0 > 0");
  }
  SolveState state = init ? std::move(*init) : SolveState::zero(grid);
  if (state.g.size() != (grid.Nt - 1) * grid.Nx) {
    throw ConfigError("initial state does not match the grid");
  }
  const bool potential = options.coordinates == SolverCoordinates::Potential;
  std::vector<double> x;
  std::function<void(std::span<const double>, std::vector<double>&)> apply;
  std::function<void(std::span<double>)> project;
  std::function<NodeField(std::span<const double>)> to_psi;
  if (potential) {
    x = interior_from_psi(grid, psi_from_differences(grid, state.g));
    apply = [&](std::span<const double> v, std::vector<double>& out) {
      out = interior_from_psi(grid, operator_action(cfg, psi_from_interior(grid, v)));
    };
    project = [&](std::span<double> v) { feasible.project_potential(v); };
    to_psi = [&](std::span<const double> v) { return psi_from_interior(grid, v); };
  } else {
    x = state.g;
    apply = [&](std::span<const double> v, std::vector<double>& out) {
      transformed_operator(cfg, v, out);
    };
    project = [&](std::span<double> v) { feasible.project(v); };
    to_psi = [&](std::span<const double> v) { return psi_from_differences(grid, v); };
  }
  project(x);
  state.eps = cfg.eps();
  state.iter = 0;
  state.history.clear();
  double tau = state.tau > 0.0 ? state.tau : options.tau0;
  const std::size_t stride = std::max<std::size_t>(options.trace_stride, 1);

  std::vector<double> Gx, xbar, Gbar, trial;
  apply(x, Gx);

  std::vector<double> energy;
  double best = std::numeric_limits<double>::infinity();
  bool converged = false;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t iter = 0;
  for (;; ++iter) {
    // predictor with step-size backtracking
    double ratio = 0.0;
    for (;;) {
      step(x, tau, Gx, xbar);
      project(xbar);
      apply(xbar, Gbar);
      const double dx = diff_norm(xbar, x);
      ratio = dx == 0.0 ? 0.0 : tau * diff_norm(Gbar, Gx) / dx;
      if (ratio <= options.theta) break;
      tau *= 0.5;
      if (tau < 1e-14) {
        throw StagnationError(
            fmt::format("extragradient step collapsed to {} at iteration {}", tau, iter));
      }
    }
    residual = diff_norm(x, xbar) / (tau * (1.0 + norm2(x)));
    best = std::min(best, residual);
    if (iter % stride == 0) {
      state.history.push_back(best);
      energy.push_back(perspective_energy(cfg, to_psi(x)));
    }
    if (residual <= options.tol) {
      converged = true;
      break;
    }
    if (iter >= options.max_iter) break;
    // corrector
    step(x, tau, Gbar, trial);
    project(trial);
    x.swap(trial);
    apply(x, Gx);
    if (options.tau_growth > 1.0 && ratio < 0.5 * options.theta) tau *= options.tau_growth;
  }
  NodeField psi = to_psi(x);
  state.g = potential ? differences_from_psi(grid, psi) : std::move(x);
  state.iter = iter;
  state.tau = tau;
  state.residual = residual;
  if (state.history.empty() || state.history.back() != best) state.history.push_back(best);

  SolveReport summary = evaluate_report(cfg, psi);
  summary.converged = converged;
  summary.iterations = iter;
  summary.final_residual = residual;
  summary.final_tau = tau;
  summary.residual_trace = state.history;
  summary.energy_trace = std::move(energy);
  return {std::move(psi), std::move(summary), std::move(state)};
}

std::vector<double> default_eps_schedule() { return {0.5, 0.25, 0.1, 0.05, 0.02, 0.01}; }

ContinuationResult continuation(const OperatorConfig& base, const FeasibleSet& feasible,
                                const std::vector<double>& schedule, const SolverOptions& options,
                                bool chained) {
  if (schedule.empty()) throw ConfigError("empty eps schedule");
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    if (!(schedule[s] > 0.0 && schedule[s] < 1.0)) {
      throw ConfigError(fmt::format("eps schedule entry {} outside (0, 1)", schedule[s]));
    }
    if (s > 0 && !(schedule[s] < schedule[s - 1])) {
      throw ConfigError("eps schedule must be strictly decreasing");
    }
  }
  ContinuationResult out;
  std::optional<SolveState> warm;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const OperatorConfig cfg = base.with_eps(schedule[s]);
    SolveResult res = solve_vi(cfg, feasible, chained ? warm : std::nullopt, options);
    out.stages.push_back({schedule[s], res.report});
    out.psi = std::move(res.psi);
    if (!res.report.converged) {
      out.failed_stage = s;
      return out;
    }
    warm = std::move(res.state);
  }
  out.completed = true;
  return out;
}

}  // namespace rmfp
