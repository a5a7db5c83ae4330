#pragma once

#include <stdexcept>
#include <string>

namespace relstable {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of a function (u <= 0, q > R, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature did not reach its tolerance. Carries the partial
/// value and the residual error estimate at the point of giving up.
class QuadratureFailure : public Error {
 public:
  QuadratureFailure(const std::string& what, double partial, double residual)
      : Error(what + " (partial=" + std::to_string(partial) +
              ", residual=" + std::to_string(residual) + ")"),
        partial_(partial),
        residual_(residual) {}
  double partial() const { return partial_; }
  double residual() const { return residual_; }

 private:
  double partial_;
  double residual_;
};

/// Tempering rejection would accept less often than the configured floor.
class StepTooLarge : public Error {
 public:
  using Error::Error;
};

/// A radial kernel table was used for a different m*t than it was built for.
class StaleTable : public Error {
 public:
  using Error::Error;
};

class TailFailure : public Error {
 public:
  using Error::Error;
};

class InsufficientBudget : public Error {
 public:
  using Error::Error;
};

}  // namespace relstable
