#pragma once

#include <stdexcept>
#include <string>

namespace cvmdi {

// Bad parameter values or contract violations (caller error).
struct DomainError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Solver failures and unphysical intermediate states (data-dependent).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent run configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace cvmdi
