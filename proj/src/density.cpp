#include "rmfp/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "rmfp/errors.hpp"

namespace rmfp {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double to_double(const std::string& text, const std::string& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("{}:{}: not a number: '{}'", path, line, text));
  }
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open density file '{}'", path));
  return in;
}

std::vector<double> parse_args(std::string_view spec, std::string_view name) {
  std::string_view rest = spec.substr(name.size());
  if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
    throw ConfigError(fmt::format("malformed density spec '{}'", spec));
  }
  rest = rest.substr(1, rest.size() - 2);
  std::vector<double> out;
  for (const auto& piece : split_csv(std::string(rest))) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("malformed number in density spec '{}'", spec));
    }
  }
  return out;
}

}  // namespace

double DensityTable::operator()(double at) const {
  if (at <= x.front()) return density.front();
  if (at >= x.back()) return density.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (at - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * density[lo] + w * density[hi];
}

DensityTable load_density_csv(const std::string& path) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t lineno = 0;
  DensityTable table;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells.size() != 2 || cells[0] != "x" || cells[1] != "density") {
        throw ConfigError(fmt::format("{}:{}: expected header 'x,density'", path, lineno));
      }
      header = true;
      continue;
    }
    if (cells.size() != 2) {
      throw ConfigError(fmt::format("{}:{}: expected two columns", path, lineno));
    }
    const double x = to_double(cells[0], path, lineno);
    const double d = to_double(cells[1], path, lineno);
    if (!table.x.empty() && !(x > table.x.back())) {
      throw ConfigError(fmt::format("{}:{}: x must be strictly increasing", path, lineno));
    }
    table.x.push_back(x);
    table.density.push_back(d);
  }
  if (table.x.size() < 2 || table.x.front() > 0.0 || table.x.back() < 1.0) {
    throw ConfigError(fmt::format("{}: x samples must cover [0, 1]", path));
  }
  return table;
}

DensityTable load_field_row(const std::string& path, std::size_t row) {
  std::ifstream in = open_or_throw(path);
  std::string line;
  std::size_t lineno = 0;
  DensityTable table;
  std::size_t data_row = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (!header) {
      if (cells.size() < 3) {
        throw ConfigError(fmt::format("{}:{}: field header needs coordinates", path, lineno));
      }
      for (std::size_t c = 1; c < cells.size(); ++c) {
        table.x.push_back(to_double(cells[c], path, lineno));
      }
      header = true;
      continue;
    }
    if (data_row++ != row) continue;
    if (cells.size() != table.x.size() + 1) {
      throw ConfigError(fmt::format("{}:{}: row width does not match header", path, lineno));
    }
    for (std::size_t c = 1; c < cells.size(); ++c) {
      table.density.push_back(to_double(cells[c], path, lineno));
    }
    return table;
  }
  throw ConfigError(fmt::format("{}: field has no row {}", path, row));
}

bool is_builtin_density(std::string_view spec) {
  return spec == "uniform" || spec.starts_with("gauss(") || spec.starts_with("sin-bump(");
}

std::vector<double> sample_density(std::string_view spec, const GridSpec& grid) {
  std::vector<double> out(grid.Nx + 1);
  if (spec == "uniform") {
    std::fill(out.begin(), out.end(), 1.0);
    return out;
  }
  if (spec.starts_with("gauss(")) {
    const auto args = parse_args(spec, "gauss");
    if (args.size() != 2 || !(args[1] > 0.0)) {
      throw ConfigError(fmt::format("gauss(center,width) needs width > 0: '{}'", spec));
    }
    for (std::size_t k = 0; k <= grid.Nx; ++k) {
      const double z = (grid.x(k) - args[0]) / args[1];
      out[k] = std::exp(-0.5 * z * z);
    }
    return out;
  }
  if (spec.starts_with("sin-bump(")) {
    const auto args = parse_args(spec, "sin-bump");
    if (args.size() != 1 || !(std::abs(args[0]) < 1.0)) {
      throw ConfigError(fmt::format("sin-bump(amplitude) needs |amplitude| < 1: '{}'", spec));
    }
    for (std::size_t k = 0; k <= grid.Nx; ++k) {
      out[k] = 1.0 + args[0] * std::sin(2.0 * std::numbers::pi * grid.x(k));
    }
    return out;
  }
  const std::string path(spec);
  std::string first;
  {
    std::ifstream in = open_or_throw(path);
    while (std::getline(in, first) && trim(first).empty()) {
    }
  }
  const auto head = split_csv(first);
  if (head.empty()) throw ConfigError(fmt::format("density file '{}' is empty", path));
  const DensityTable table = head.front() == "x" ? load_density_csv(path) : load_field_row(path, 0);
  for (std::size_t k = 0; k <= grid.Nx; ++k) out[k] = table(grid.x(k));
  return out;
}

}  // namespace rmfp
