#pragma once

#include <stdexcept>
#include <string>

namespace impulsim {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// An argument lies outside the domain of the operation (e.g. t outside [a,b]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed source text; carries a 0-based character position.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Arithmetic failure during expression evaluation (division by zero,
/// log/sqrt of a negative number, non-finite result).
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Requested derivative of a non-differentiable node (abs).
class UnsupportedDerivativeError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure failed to converge or produced a non-finite value.
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration (wrong override count, bad scenario block).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse: mismatched objects combined (e.g. clock from another completion).
class UsageError : public Error {
 public:
  using Error::Error;
};

/// A stated precondition of the operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// State norm exceeded the growth guard during integration.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// Non-finite state encountered during integration.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace impulsim
