#include "rmfp/app.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <json.hpp>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"
#include "rmfp/io.hpp"
#include "rmfp/parallel.hpp"
#include "rmfp/reconstruct.hpp"

namespace rmfp {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

json to_json(const Certificate& c) {
  return {{"name", c.name},         {"passed", c.passed},   {"measured", c.measured},
          {"bound", c.bound},       {"details", c.details}, {"wall_time_ms", c.wall_time_ms}};
}

json to_json(const std::vector<Certificate>& certs) {
  json arr = json::array();
  for (const auto& c : certs) arr.push_back(to_json(c));
  return arr;
}

json to_json(const StageReport& s) {
  const SolveReport& r = s.report;
  return {{"eps", s.eps},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"final_residual", r.final_residual},
          {"final_tau", r.final_tau},
          {"bv_bound", r.bv_bound},
          {"psi_x_l1", r.psi_x_l1},
          {"psi_t_l1", r.psi_t_l1},
          {"kappa_energy", r.kappa_energy},
          {"min_density", r.min_density},
          {"row_mass_error", r.row_mass_error},
          {"pileup_left", r.pileup_left},
          {"pileup_right", r.pileup_right},
          {"residual_trace", r.residual_trace},
          {"energy_trace", r.energy_trace}};
}

json norms(const ResidualNorms& n) { return {{"l1", n.l1}, {"linf", n.linf}}; }

json config_json(const RunConfig& c) {
  return {{"T", c.T},
          {"Nt", c.Nt},
          {"Nx", c.Nx},
          {"hamiltonian", c.hamiltonian},
          {"m0", c.m0},
          {"mT", c.mT},
          {"q", c.q},
          {"eps_schedule", c.schedule},
          {"solver",
           {{"tol", c.solver.tol},
            {"max_iter", c.solver.max_iter},
            {"theta", c.solver.theta},
            {"tau0", c.solver.tau0},
            {"tau_growth", c.solver.tau_growth},
            {"coordinates", c.solver.coordinates == SolverCoordinates::Potential ? "potential"
                                                                                 : "differences"}}},
          {"seed", c.seed}};
}

bool all_passed(const std::vector<Certificate>& certs) {
  return std::all_of(certs.begin(), certs.end(), [](const Certificate& c) { return c.passed; });
}

class Logger {
 public:
  Logger(std::ostream& out, bool quiet) : out_(out), quiet_(quiet) {}
  template <class... Args>
  void operator()(fmt::format_string<Args...> f, Args&&... args) {
    if (!quiet_) out_ << fmt::format(f, std::forward<Args>(args)...) << '\n' << std::flush;
  }

 private:
  std::ostream& out_;
  bool quiet_;
};

std::vector<double> node_values(const NodeField& f) {
  return {f.values().begin(), f.values().end()};
}

/// Continuation, reconstruction and artifacts. Fills `report` and returns
/// whether every stage converged.
bool solve_and_write(const RunConfig& cfg, json& report, Logger& log) {
  const HamiltonianModel model = HamiltonianModel::parse(cfg.hamiltonian);
  const GridSpec grid = GridSpec::make(cfg.T, cfg.Nt, cfg.Nx);
  const ReferencePotential ref = build_reference_potential(
      grid, BoundaryDensities::make(grid, sample_density(cfg.m0, grid), sample_density(cfg.mT, grid)));
  const double q = cfg.q != 0.0 ? cfg.q : default_q(model);
  const FeasibleSet feasible(ref);
  const OperatorConfig base(model, ref, q, cfg.schedule.front());
  const double kappa = model.growth().kappa;
  report["q"] = q;

  ContinuationResult cont;
  try {
    cont = continuation(base, feasible, cfg.schedule, cfg.solver);
  } catch (const StagnationError& e) {
    report["converged"] = false;
    report["partial"] = true;
    report["error"] = e.what();
    report["stages"] = json::array();
    log("solver stagnated: {}", e.what());
    return false;
  }
  json stages = json::array();
  for (const auto& s : cont.stages) {
    stages.push_back(to_json(s));
    log("eps {:<6g} {} after {} iterations (residual {:.3e})", s.eps,
        s.report.converged ? "converged" : "NOT converged", s.report.iterations,
        s.report.final_residual);
  }
  report["stages"] = stages;
  report["converged"] = cont.completed;
  report["partial"] = !cont.completed;
  report["failed_stage"] = cont.failed_stage ? json(*cont.failed_stage) : json(nullptr);

  const std::filesystem::path& out = cfg.out_dir;
  NodeField phi = cont.psi;
  {
    auto v = phi.values();
    const auto b = ref.phi0.values();
    for (std::size_t n = 0; n < v.size(); ++n) v[n] += b[n];
  }
  write_node_csv(out / "phi.csv", grid, phi);
  json artifacts = json::array({"phi.csv"});

  std::vector<Certificate> certs = apriori_certificates(ref, cont.stages, kappa);
  certs.push_back(trace_scaling_diagnostic(ref, cont.psi, kappa));
  try {
    const MfpSolution sol = reconstruct_solution(model, ref, cont.psi);
    const MfpResiduals res = mfp_residuals(model, ref, sol);
    const double linking = linking_consistency(model, sol);
    const double euler = euler_identity_defect(model, sol);
    report["reconstruction"] = {{"masked_cells", sol.masked_count},
                                {"u00", sol.u(0, 0)},
                                {"hj", norms(res.hj_norm)},
                                {"continuity", norms(res.ct_norm)},
                                {"flux_bc", norms(res.flux_bc_norm)},
                                {"planning_bc", norms(res.planning_norm)},
                                {"linking_linf", linking},
                                {"euler_defect", euler}};
    certs.push_back(upper_bound_certificate("euler_identity", euler, 1e-10,
                                            "max |F_j j + F_m m - F| over unmasked cells"));

    write_cell_csv(out / "m.csv", grid, sol.m);
    write_node_csv(out / "u.csv", grid, sol.u);
    std::vector<double> tc(grid.Nt), xc(grid.Nx), tn(grid.Nt + 1), xn(grid.Nx + 1);
    for (std::size_t i = 0; i < grid.Nt; ++i) tc[i] = grid.t_mid(i);
    for (std::size_t k = 0; k < grid.Nx; ++k) xc[k] = grid.x_mid(k);
    for (std::size_t i = 0; i <= grid.Nt; ++i) tn[i] = grid.t(i);
    for (std::size_t k = 0; k <= grid.Nx; ++k) xn[k] = grid.x(k);
    write_heatmap_svg(out / "m_heatmap.svg", "density m", tc, xc,
                      {sol.m.values().begin(), sol.m.values().end()});
    write_heatmap_svg(out / "u_heatmap.svg", "value function u", tn, xn, node_values(sol.u));
    // m at t = 0, T/2, T: the node-row densities are the x-differences of phi
    std::vector<Curve> curves;
    for (std::size_t i : {std::size_t{0}, grid.Nt / 2, grid.Nt}) {
      Curve c{fmt::format("t = {:.3g}", grid.t(i)), xc, {}};
      for (std::size_t k = 0; k < grid.Nx; ++k) c.y.push_back((phi(i, k + 1) - phi(i, k)) / grid.dx());
      curves.push_back(std::move(c));
    }
    write_line_plot_svg(out / "slices.svg", "density slices", "x", "m", curves);
    for (const char* f : {"m.csv", "u.csv", "m_heatmap.svg", "u_heatmap.svg", "slices.svg"}) {
      artifacts.push_back(f);
    }
  } catch (const DegenerateDensityError& e) {
    report["reconstruction"] = {{"error", e.what()}};
    certs.push_back({"reconstruction", false, std::nan(""), 0.0, e.what(), 0.0});
  }
  report["certificates"] = to_json(certs);
  artifacts.push_back("report.json");
  report["artifacts"] = artifacts;
  return cont.completed;
}

json mms_json(const MmsStudy& study) {
  json levels = json::array();
  for (const auto& l : study.levels) {
    levels.push_back({{"n", l.n},
                      {"h", l.h},
                      {"converged", l.converged},
                      {"iterations", l.iterations},
                      {"psi_error_l1", l.psi_error_l1},
                      {"hj_l1", l.hj_l1},
                      {"ct_l1", l.ct_l1},
                      {"linking_linf", l.linking_linf}});
  }
  return {{"levels", levels},
          {"psi_orders", study.psi_orders},
          {"hj_orders", study.hj_orders},
          {"ct_orders", study.ct_orders}};
}

/// Randomized property battery: each case draws a model, grid, densities
/// and eps from the seed and runs the cheap certificates plus a small solve.
std::vector<Certificate> run_sweep(const RunConfig& cfg, json& cases, Logger& log) {
  std::mt19937_64 rng(cfg.seed);
  const char* models[] = {"quadratic", "power(1.5)", "power(3)", "mixed-quartic(0.5)"};
  std::uniform_int_distribution<int> pick_model(0, 3);
  std::uniform_int_distribution<int> pick_n(6, 12);
  std::uniform_real_distribution<double> amp(-0.6, 0.6);
  std::uniform_real_distribution<double> center(0.2, 0.8);
  std::uniform_real_distribution<double> eps(0.05, 0.3);
  std::uniform_int_distribution<std::uint64_t> seeds;
  std::vector<Certificate> all;
  for (std::size_t c = 0; c < cfg.sweep_cases; ++c) {
    const std::string ham = models[pick_model(rng)];
    const auto n = static_cast<std::size_t>(pick_n(rng));
    auto density = [&] {
      return rng() % 2 ? fmt::format("sin-bump({:.4f})", amp(rng))
                       : fmt::format("gauss({:.4f},0.35)", center(rng));
    };
    const std::string m0 = density();
    const std::string mT = density();
    const double e = eps(rng);
    const std::uint64_t case_seed = seeds(rng);
    log("case {:02}: {} on {}x{}, m0 = {}, mT = {}, eps = {:.3f}", c, ham, n, n, m0, mT, e);

    std::vector<Certificate> certs;
    try {
      const HamiltonianModel model = HamiltonianModel::parse(ham);
      const GridSpec grid = GridSpec::make(cfg.T, n, n);
      const ReferencePotential ref = build_reference_potential(
          grid, BoundaryDensities::make(grid, sample_density(m0, grid), sample_density(mT, grid)));
      const FeasibleSet feasible(ref);
      const OperatorConfig op(model, ref, default_q(model), e);
      certs = identity_certificates(model, case_seed, 200);
      certs.push_back(monotonicity_certificate(op, feasible, 50, case_seed));
      certs.push_back(gradient_structure_certificate(op, feasible, 5, case_seed));
      SolverOptions so = cfg.solver;
      so.tol = 1e-6;
      const SolveResult res = solve_vi(op, feasible, std::nullopt, so);
      Certificate conv = upper_bound_certificate("solve", res.report.final_residual, so.tol,
                                                 fmt::format("{} iterations", res.report.iterations));
      conv.passed = conv.passed && res.report.converged;
      certs.push_back(conv);
      certs.push_back(vi_certificate(op, feasible, res.psi, 20, case_seed));
    } catch (const std::exception& ex) {
      certs.push_back({"case_error", false, std::nan(""), 0.0, ex.what(), 0.0});
    }
    for (auto& cert : certs) cert.name = fmt::format("case{:02}/{}", c, cert.name);
    cases.push_back({{"case", c},
                     {"hamiltonian", ham},
                     {"n", n},
                     {"m0", m0},
                     {"mT", mT},
                     {"eps", e},
                     {"passed", all_passed(certs)}});
    all.insert(all.end(), certs.begin(), certs.end());
  }
  return all;
}

void log_certificates(Logger& log, const std::vector<Certificate>& certs) {
  for (const auto& c : certs) {
    log("  [{}] {:<28} measured {:.4g} bound {:.4g}", c.passed ? "pass" : "FAIL", c.name,
        c.measured, c.bound);
  }
}

}  // namespace

int run_config(RunMode mode, RunConfig cfg, const RunOverrides& overrides, std::ostream& log_out,
               std::ostream& err) {
  Logger log(log_out, overrides.quiet);
  try {
    cfg.mode = mode;
    if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
    if (overrides.seed) cfg.seed = *overrides.seed;
    if (overrides.threads) cfg.threads = *overrides.threads;
    validate_config(cfg);
    set_thread_count(cfg.threads);

    const auto start = Clock::now();
    json report = {{"mode", std::string(mode_name(mode))}, {"config", config_json(cfg)},
                   {"threads", thread_count()}};
    // tabulated densities are only piecewise linear, below the smoothness the
    // classical theory assumes; accepted, but say so
    json notes = json::array();
    for (const auto& [name, spec] : {std::pair{"m0", cfg.m0}, std::pair{"mT", cfg.mT}}) {
      if (!is_builtin_density(spec)) {
        notes.push_back(fmt::format("{} is tabulated (piecewise linear, not C1)", name));
      }
    }
    report["notes"] = notes;
    bool ok = true;
    switch (mode) {
      case RunMode::Solve: {
        ok = solve_and_write(cfg, report, log);
        break;
      }
      case RunMode::Verify: {
        const auto certs = run_suite(cfg.suite());
        report["certificates"] = to_json(certs);
        log_certificates(log, certs);
        ok = all_passed(certs);
        if (cfg.write_fields) {
          json solve_part;
          ok = solve_and_write(cfg, solve_part, log) && ok;
          report["solve"] = solve_part;
        }
        break;
      }
      case RunMode::Mms: {
        const HamiltonianModel model = HamiltonianModel::parse(cfg.hamiltonian);
        const MmsStudy study = run_mms_study(model, cfg.mms);
        for (const auto& l : study.levels) {
          log("n = {:<4} psi error {:.3e}  hj {:.3e}  ct {:.3e}  ({} iterations)", l.n,
              l.psi_error_l1, l.hj_l1, l.ct_l1, l.iterations);
        }
        const auto certs = mms_certificates(study);
        report["mms"] = mms_json(study);
        report["certificates"] = to_json(certs);
        log_certificates(log, certs);
        ok = all_passed(certs);
        break;
      }
      case RunMode::Sweep: {
        json cases = json::array();
        const auto certs = run_sweep(cfg, cases, log);
        report["cases"] = cases;
        report["certificates"] = to_json(certs);
        ok = all_passed(certs);
        log("{} certificates, {} failed", certs.size(),
            std::count_if(certs.begin(), certs.end(), [](const Certificate& c) { return !c.passed; }));
        break;
      }
    }
    report["passed"] = ok;
    report["wall_time_ms"] = elapsed_ms(start);
    write_text(cfg.out_dir / "report.json", report.dump(2) + "\n");
    log("report written to {}", (cfg.out_dir / "report.json").string());
    return ok ? kExitOk : kExitFailure;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

int run(RunMode mode, const std::filesystem::path& config_path, const RunOverrides& overrides,
        std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  }
  return run_config(mode, std::move(cfg), overrides, log, err);
}

}  // namespace rmfp
