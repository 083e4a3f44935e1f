#pragma once

#include <stdexcept>
#include <string>

namespace smq {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfiniteMeanError : public Error {
 public:
  using Error::Error;
};

/// Raised when an operation is not available for a distribution variant.
class UnsupportedOperation : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Event or segment count exceeded its cap (non-conservative or transient run).
class ExplosionError : public Error {
 public:
  using Error::Error;
};

/// Discount factor estimate is not contracting (E C >= 1).
class InvalidRateError : public Error {
 public:
  using Error::Error;
};

class MomentConditionError : public Error {
 public:
  MomentConditionError(std::size_t order, const std::string& what)
      : Error(what), order_(order) {}
  std::size_t order() const { return order_; }

 private:
  std::size_t order_;
};

class InvalidModelError : public Error {
 public:
  using Error::Error;
};

}  // namespace smq
