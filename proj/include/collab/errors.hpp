#pragma once

#include <stdexcept>
#include <string>

namespace collab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (e.g. x outside [0,1)).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Derivative requested at a branch endpoint.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A map, scheme or box specification that violates its invariants.
class SpecificationError : public Error {
 public:
  using Error::Error;
};

/// Grid too coarse to resolve the hole.
class ResolutionError : public Error {
 public:
  using Error::Error;
};

/// Operation requires a lattice mode the scheme is not in.
class ModeError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual, int iterations)
      : Error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Estimator precondition not met by the sample (too few hits, survivors...).
class SampleError : public Error {
 public:
  using Error::Error;
};

/// Exact arithmetic requested for a map that is not rational-affine.
class NonRationalError : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration rejected by the schema or by semantic checks.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace collab
