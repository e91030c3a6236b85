#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpbeta {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Adaptive routine ran out of budget. Carries the best estimate reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate) {}
  double best_estimate() const noexcept { return best_estimate_; }

 private:
  double best_estimate_;
};

/// Malformed CSV input; message names the row and column.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent draw file; message names the line.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A configured resource cap was exceeded (e.g. live component count).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal sampler invariant broken. Indicates a bug, not bad input.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace dpbeta
