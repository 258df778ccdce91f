#pragma once

#include <stdexcept>
#include <string>

namespace etp {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration or an input violating a documented invariant.
/// The message names the offending field or quantity.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature could not reach the requested tolerance.
class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain an operation is defined on.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// The ODE integrator underflowed its step size.
class StiffnessFailure : public Error {
 public:
  using Error::Error;
};

/// A zero sits on (or numerically on) a contour used for winding counts,
/// and jittering the contour did not resolve it.
class BoundaryZero : public Error {
 public:
  using Error::Error;
};

/// Iterative refinement failed to converge.
class NoConvergence : public Error {
 public:
  using Error::Error;
};

/// Requested evaluation too close to a pole of a diagnostic quantity.
class NearPole : public Error {
 public:
  using Error::Error;
};

}  // namespace etp
