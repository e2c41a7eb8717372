#pragma once

#include <stdexcept>
#include <string>

namespace greysvr {

/// Malformed or inconsistent input data (CSV rows, degenerate columns, IO).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by OLS when the design matrix is numerically rank deficient.
class RankDeficiencyError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid configuration or command-line usage.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The SVR dual solver hit its iteration cap before reaching the KKT tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double violation)
      : std::runtime_error(what), violation_(violation) {}

  [[nodiscard]] double violation() const noexcept { return violation_; }

 private:
  double violation_;
};

}  // namespace greysvr
