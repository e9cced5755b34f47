#pragma once

#include <stdexcept>
#include <string>

namespace rmfp {

/// Argument outside the domain of a function (non-finite input, negative mass, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// An inner numerical search failed to converge.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The extragradient step size collapsed below its floor.
class StagnationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid problem or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The reconstructed density vanishes on too many cells to recover u.
class DegenerateDensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rmfp
