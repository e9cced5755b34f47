#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rmfp/solver.hpp"
#include "rmfp/verify.hpp"

namespace rmfp {

enum class RunMode { Solve, Verify, Mms, Sweep };

RunMode parse_mode(std::string_view text);
std::string_view mode_name(RunMode mode);

/// Everything a run needs. Density specs that name files are resolved
/// against the directory of the config file.
struct RunConfig {
  RunMode mode = RunMode::Solve;
  double T = 1.0;
  std::size_t Nt = 32;
  std::size_t Nx = 32;
  std::string hamiltonian = "quadratic";
  std::string m0 = "uniform";
  std::string mT = "uniform";
  /// 0 selects max(3, l + 1).
  double q = 0.0;
  std::vector<double> schedule = default_eps_schedule();
  SolverOptions solver{};
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 1;
  std::size_t threads = 0;

  // verify
  std::size_t monotonicity_pairs = 1000;
  std::size_t vi_samples = 100;
  std::size_t minty_tests = 20;
  double minty_tol = 1e-5;
  double baseline_eps = 0.05;
  bool run_mms = true;
  bool write_fields = false;

  MmsOptions mms{};

  // sweep
  std::size_t sweep_cases = 12;

  SuiteConfig suite() const;
};

/// Parses `key = value` lines grouped under [problem], [regularization],
/// [solver], [run], [verify], [mms] and [sweep]. '#' and ';' start comments.
/// Errors are ConfigError with "origin:line: message".
RunConfig parse_config(std::string_view text, const std::string& origin,
                       const std::filesystem::path& base_dir = {});

/// Reads and parses a file; an unreadable file is a ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Checks grid, Hamiltonian, q >= l + 1, densities and schedule without solving.
void validate_config(const RunConfig& config);

}  // namespace rmfp
