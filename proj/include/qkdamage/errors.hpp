#pragma once

#include <stdexcept>
#include <string>

namespace qkdamage {

/// A query that is meaningless for the object's current state, e.g. asking a
/// destroyed diode for its overvoltage.
class MisuseError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Rejected user input: bad profile ranges, unknown band, malformed config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An internal consistency check failed. Always a bug.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

inline void ensure(bool condition, const std::string& what) {
  if (!condition) throw InvariantViolation(what);
}

}  // namespace qkdamage
