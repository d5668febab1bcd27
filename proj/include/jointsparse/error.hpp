#ifndef JOINTSPARSE_ERROR_HPP
#define JOINTSPARSE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace jointsparse {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration (bad sizes, negative tolerances, ...).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Non-conforming matrix shapes.
class ShapeError : public ConfigError {
public:
  using ConfigError::ConfigError;
};

/// A solver produced non-finite values.
class DivergenceError : public Error {
public:
  DivergenceError(const std::string &what, int iteration, int stage = -1)
      : Error(what), iteration_(iteration), stage_(stage) {}

  int iteration() const noexcept { return iteration_; }
  /// Outer stage index (1-based) or -1 when raised outside a staged run.
  int stage() const noexcept { return stage_; }

private:
  int iteration_;
  int stage_;
};

namespace detail {

inline void require(bool cond, const std::string &msg) {
  if (!cond)
    throw ConfigError(msg);
}

inline void require_shape(bool cond, const std::string &msg) {
  if (!cond)
    throw ShapeError(msg);
}

} // namespace detail
} // namespace jointsparse

#endif
