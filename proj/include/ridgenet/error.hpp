#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ridgenet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed expression text. `offset` is the byte offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A point where the requested derivatives do not exist (abs at 0, sqrt at 0,
/// division by zero).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature ran out of panels before reaching the tolerance.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double best, double bound)
      : Error(what), best_estimate_(best), error_bound_(bound) {}
  double best_estimate() const noexcept { return best_estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double best_estimate_;
  double error_bound_;
};

/// A mathematical precondition of an operation is not met (target not in
/// W(R), insufficient smoothness, grid too coarse, stencil out of range).
class RefusalError : public Error {
 public:
  using Error::Error;
};

/// Malformed file content or invalid arguments.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace ridgenet
