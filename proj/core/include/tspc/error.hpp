#pragma once

#include <stdexcept>
#include <string>

namespace tspc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument: out-of-domain value, non-finite input, size mismatch.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A covariance or Jacobian that cannot be inverted or factorized even after
/// regularization.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// A mapped function produced a non-finite value during propagation.
class PropagationError : public Error {
 public:
  using Error::Error;
};

/// A sequence evaluation could not be completed; carries the node index.
class EvaluationError : public Error {
 public:
  EvaluationError(std::size_t node, const std::string& what)
      : Error("node " + std::to_string(node) + ": " + what), node_(node) {}

  std::size_t node() const noexcept { return node_; }

 private:
  std::size_t node_;
};

/// No unvisited candidate is left to select.
class ExhaustionError : public Error {
 public:
  using Error::Error;
};

/// A record or configuration failed validation (file ingestion, configs).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Orbital singularity: zero radius in the dynamics.
class SingularityError : public Error {
 public:
  using Error::Error;
};

}  // namespace tspc
