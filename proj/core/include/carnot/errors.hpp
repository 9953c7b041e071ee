#pragma once

#include <stdexcept>
#include <string>

namespace carnot {

// Malformed input: wrong dimension, asymmetric matrix, unsorted radii.
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed input outside the operation's domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Evaluation at the pole of a kernel.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations(iterations), residual(residual) {}
  int iterations;
  double residual;
};

}  // namespace carnot
