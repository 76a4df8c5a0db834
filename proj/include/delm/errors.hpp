#pragma once

#include <stdexcept>
#include <string>

namespace delm {

// Ensemble statistics that divide by N^P - 1 are undefined below two learners.
class DegenerateEnsembleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A fitted-model evaluation hit a non-positive log argument.
class ModelDomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The 1-D data-size solver could not produce a usable optimum.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Brute-force enumeration guard (instance too large).
class OracleSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Configuration file problems, with the offending line when known.
class ConfigParseError : public std::runtime_error {
 public:
  ConfigParseError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Curve fit failed to produce finite parameters; carries the best attempt.
class FitFailureError : public std::runtime_error {
 public:
  FitFailureError(const std::string& what, double rmse)
      : std::runtime_error(what), rmse_(rmse) {}
  double rmse() const { return rmse_; }

 private:
  double rmse_;
};

}  // namespace delm
