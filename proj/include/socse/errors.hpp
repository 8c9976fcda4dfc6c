#pragma once

#include <stdexcept>
#include <string>

namespace socse {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (e.g. tau outside [-1, 1]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Vector or matrix sizes do not agree with what the operation expects.
class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// An internal iteration failed to reach its tolerance. Indicates a defect, not bad input.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// The collocation layout violates the degrees-of-freedom inequality.
class DofViolation : public Error {
 public:
  DofViolation(long lhs, long rhs)
      : Error("degrees-of-freedom violation: (n_u + n_x)(M+1) = " + std::to_string(lhs) +
              " < n_x(N+1) = " + std::to_string(rhs)),
        lhs_(lhs),
        rhs_(rhs) {}

  long lhs() const { return lhs_; }
  long rhs() const { return rhs_; }

 private:
  long lhs_;
  long rhs_;
};

/// The vehicle sits on the curvature singularity 1 - kappa * w = 0.
class SingularCurvilinear : public Error {
 public:
  using Error::Error;
};

/// A decision vector does not match the variable layout it is decoded with.
class LayoutMismatch : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration file or option value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace socse
