#pragma once

#include <stdexcept>
#include <string>

namespace slowssep {

/// Raised when an argument violates an operation's precondition.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A mass path touches 0 or 1 where the optimal control is unbounded.
class SingularPath : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Problem size exceeds what an exact solver accepts.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Nothing to fit / estimate (degenerate data).
class DegenerateData : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidParameter(what);
}

}  // namespace slowssep
