#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pmt/tensor.hpp"

namespace pmt {

/// Base of all toolkit errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or preconditions (bad metric parameters, point not on
/// the boundary, hemisphere hitting an excision, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference stencil needed nodes outside the domain.
class StencilError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular metric, solver non-convergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Conjugate-gradient iteration cap exceeded; carries the residual history.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, std::vector<double> history)
      : NumericalError(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Configuration file errors, with the offending line where known.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, int line = -1)
      : Error(line >= 0 ? "line " + std::to_string(line + 1) + ": " + what : what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

std::string format_point(const Vec3& x);

}  // namespace pmt
