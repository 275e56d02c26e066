#pragma once

#include <stdexcept>
#include <string>

namespace matineq {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative kernel failed to converge, or a computed quantity that must be
/// real/nonnegative came out outside its tolerance band.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Input outside the mathematical domain of an operation (e.g. an indefinite
/// matrix passed where a positive semidefinite one is required).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of a pipeline stage does not hold.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// The instance is degenerate for the requested operation (e.g. sigma_r(AB) = 0);
/// callers usually skip or perturb it.
class DegenerateInstance : public Error {
 public:
  using Error::Error;
};

}  // namespace matineq
