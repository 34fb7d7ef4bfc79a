#pragma once

#include <stdexcept>
#include <string>

namespace tpp {

enum class ErrorKind {
  Config,      // malformed or invalid run configuration
  Numeric,     // solver/quadrature failure, non-finite values
  Assumption,  // a modelling assumption failed numerically (e.g. finite hitting time)
  Domain,      // point outside the closure of the transition region
  Invariant,   // a structural invariant was violated
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

class AssumptionViolation : public Error {
 public:
  explicit AssumptionViolation(const std::string& what) : Error(ErrorKind::Assumption, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class InvariantViolation : public Error {
 public:
  explicit InvariantViolation(const std::string& what) : Error(ErrorKind::Invariant, what) {}
};

// Process exit codes used by the command-line tool.
inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Numeric: return 3;
    case ErrorKind::Domain: return 3;
    case ErrorKind::Assumption: return 4;
    case ErrorKind::Invariant: return 4;
  }
  return 1;
}

}  // namespace tpp
