#pragma once

#include <stdexcept>
#include <string>

namespace ddlab {

// Bad numeric input (negative density value, s outside [0,1], ...).
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Inconsistent or inadmissible parameters / preconditions.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A structural hypothesis failed certification.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Grid window too small, degenerate input, etc.
struct ConfigurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Iterative solver did not converge.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ddlab
