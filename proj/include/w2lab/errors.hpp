#pragma once

#include <stdexcept>
#include <string>

namespace w2lab {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatch, empty input, bad probabilities.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An integral or series that does not converge for the given parameters.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A mathematical hypothesis of the checked result does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A sampler produced a value outside its declared contract.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_violation)
      : Error(what), last_violation_(last_violation) {}
  double last_violation() const noexcept { return last_violation_; }

 private:
  double last_violation_;
};

/// Discretization could not resolve the quantity to the requested accuracy.
class InconclusiveError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace w2lab
