#include "rmfp/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "rmfp/density.hpp"
#include "rmfp/errors.hpp"

namespace rmfp {

RunMode parse_mode(std::string_view text) {
  if (text == "solve") return RunMode::Solve;
  if (text == "verify") return RunMode::Verify;
  if (text == "mms") return RunMode::Mms;
  if (text == "sweep") return RunMode::Sweep;
  throw ConfigError(fmt::format("unknown mode '{}'", text));
}

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Solve: return "solve";
    case RunMode::Verify: return "verify";
    case RunMode::Mms: return "mms";
    case RunMode::Sweep: return "sweep";
  }
  return "solve";
}

SuiteConfig RunConfig::suite() const {
  SuiteConfig s;
  s.grid = GridSpec::make(T, Nt, Nx);
  s.hamiltonian = hamiltonian;
  s.m0 = m0;
  s.mT = mT;
  s.q = q;
  s.schedule = schedule;
  s.baseline_eps = baseline_eps;
  s.solver = solver;
  s.seed = seed;
  s.monotonicity_pairs = monotonicity_pairs;
  s.vi_samples = vi_samples;
  s.minty_tests = minty_tests;
  s.minty_tol = minty_tol;
  s.run_mms = run_mms;
  s.mms = mms;
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

class LineError {
 public:
  LineError(const std::string& origin, std::size_t line) : origin_(origin), line_(line) {}
  [[noreturn]] void operator()(const std::string& msg) const {
    throw ConfigError(fmt::format("{}:{}: {}", origin_, line_, msg));
  }

 private:
  const std::string& origin_;
  std::size_t line_;
};

double as_double(std::string_view v, const LineError& fail) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) fail(fmt::format("not a number: '{}'", v));
  return out;
}

std::uint64_t as_unsigned(std::string_view v, const LineError& fail) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail(fmt::format("not a nonnegative integer: '{}'", v));
  }
  return out;
}

bool as_bool(std::string_view v, const LineError& fail) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  fail(fmt::format("not a boolean: '{}'", v));
}

template <class Parse>
auto as_list(std::string_view v, const LineError& fail, Parse parse) {
  std::vector<decltype(parse(v, fail))> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const auto piece = trim(v.substr(pos, comma == std::string_view::npos ? v.npos : comma - pos));
    if (piece.empty()) fail("empty list entry");
    out.push_back(parse(piece, fail));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string resolve_density(std::string_view spec, const std::filesystem::path& base) {
  if (is_builtin_density(spec) || base.empty()) return std::string(spec);
  const std::filesystem::path p(spec);
  if (p.is_absolute()) return p.string();
  return (base / p).lexically_normal().string();
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::string& origin,
                       const std::filesystem::path& base_dir) {
  RunConfig cfg;
  std::string section;
  std::map<std::string, std::size_t> seen;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;
    const LineError fail(origin, lineno);
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static const char* known[] = {"problem", "regularization", "solver", "run",
                                    "verify",  "mms",            "sweep"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
        fail(fmt::format("unknown section [{}]", section));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) fail("key outside of a section");
    if (key.empty()) fail("empty key");
    if (value.empty()) fail(fmt::format("missing value for '{}'", key));
    const std::string full = section + "." + key;
    if (auto [it, fresh] = seen.emplace(full, lineno); !fresh) {
      fail(fmt::format("duplicate key '{}' (first set on line {})", full, it->second));
    }
    auto count = [&] { return static_cast<std::size_t>(as_unsigned(value, fail)); };
    auto num = [&] { return as_double(value, fail); };

    if (full == "problem.T") cfg.T = num();
    else if (full == "problem.Nt") cfg.Nt = count();
    else if (full == "problem.Nx") cfg.Nx = count();
    else if (full == "problem.hamiltonian") cfg.hamiltonian = std::string(value);
    else if (full == "problem.m0") cfg.m0 = resolve_density(value, base_dir);
    else if (full == "problem.mT") cfg.mT = resolve_density(value, base_dir);
    else if (full == "regularization.q") cfg.q = num();
    else if (full == "regularization.eps_schedule") cfg.schedule = as_list(value, fail, as_double);
    else if (full == "solver.tol") cfg.solver.tol = num();
    else if (full == "solver.max_iter") cfg.solver.max_iter = count();
    else if (full == "solver.theta") cfg.solver.theta = num();
    else if (full == "solver.tau0") cfg.solver.tau0 = num();
    else if (full == "solver.tau_growth") cfg.solver.tau_growth = num();
    else if (full == "solver.trace_stride") cfg.solver.trace_stride = count();
    else if (full == "solver.coordinates") {
      if (value == "potential") cfg.solver.coordinates = SolverCoordinates::Potential;
      else if (value == "differences") cfg.solver.coordinates = SolverCoordinates::Differences;
      else fail(fmt::format("coordinates must be 'potential' or 'differences', not '{}'", value));
    } else if (full == "run.mode") {
      try {
        cfg.mode = parse_mode(value);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
    } else if (full == "run.out") cfg.out_dir = std::string(value);
    else if (full == "run.seed") cfg.seed = as_unsigned(value, fail);
    else if (full == "run.threads") cfg.threads = count();
    else if (full == "verify.monotonicity_pairs") cfg.monotonicity_pairs = count();
    else if (full == "verify.vi_samples") cfg.vi_samples = count();
    else if (full == "verify.minty_tests") cfg.minty_tests = count();
    else if (full == "verify.minty_tol") cfg.minty_tol = num();
    else if (full == "verify.baseline_eps") cfg.baseline_eps = num();
    else if (full == "verify.run_mms") cfg.run_mms = as_bool(value, fail);
    else if (full == "verify.write_fields") cfg.write_fields = as_bool(value, fail);
    else if (full == "mms.levels") {
      cfg.mms.levels.clear();
      for (auto v : as_list(value, fail, as_unsigned)) cfg.mms.levels.push_back(v);
    } else if (full == "mms.alpha") cfg.mms.alpha = num();
    else if (full == "mms.eps") cfg.mms.eps = num();
    else if (full == "mms.tol") cfg.mms.solver.tol = num();
    else if (full == "mms.max_iter") cfg.mms.solver.max_iter = count();
    else if (full == "sweep.cases") cfg.sweep_cases = count();
    else fail(fmt::format("unknown key '{}' in [{}]", key, section));
  }
  cfg.mms.T = cfg.T;
  cfg.mms.solver.coordinates = cfg.solver.coordinates;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path());
}

void validate_config(const RunConfig& config) {
  validate_suite_config(config.suite());
  if (config.mode == RunMode::Mms || (config.mode == RunMode::Verify && config.run_mms)) {
    if (config.mms.levels.size() < 2) throw ConfigError("mms.levels needs at least two entries");
    for (std::size_t n : config.mms.levels) {
      if (n < 2) throw ConfigError("mms.levels entries must be at least 2");
    }
    if (!(config.mms.eps > 0.0 && config.mms.eps < 1.0)) {
      throw ConfigError(fmt::format("mms.eps {} outside (0, 1)", config.mms.eps));
    }
  }
}

}  // namespace rmfp
