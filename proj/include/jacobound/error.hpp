#pragma once

#include <stdexcept>
#include <string>

namespace jacobound {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed model file, bad shapes, unknown activation, non-finite weights.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain (negative radius, l > u, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative routine stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The center point is not classified as the claimed class.
class CertificationRefused : public Error {
 public:
  using Error::Error;
};

}  // namespace jacobound
