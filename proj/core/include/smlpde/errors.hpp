#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smlpde {

/// Raised when an argument violates an operation's precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for derivative orders or dimensions the stencils do not cover.
class Unsupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by iterative procedures when an iterate becomes non-finite or
/// blows up. Carries the iterate index at which the failure was seen.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& what, std::size_t iterate)
      : std::runtime_error(what + " (iterate " + std::to_string(iterate) + ")"),
        iterate_(iterate) {}

  std::size_t iterate() const noexcept { return iterate_; }

 private:
  std::size_t iterate_;
};

/// A visited (t, jet) point left the regularization box.
class JetContainmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parse failures in experiment configuration files.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace smlpde
