#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdgan {

/// Invalid dimensions, shapes, or settings supplied by the caller.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was invoked in the wrong object state (e.g. backward before forward).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A training loss became non-finite.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::string step, std::size_t epoch, double value)
      : std::runtime_error("non-finite loss (" + std::to_string(value) + ") in step '" + step +
                           "' at epoch " + std::to_string(epoch)),
        step_(std::move(step)),
        epoch_(epoch) {}

  const std::string& step() const noexcept { return step_; }
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::string step_;
  std::size_t epoch_;
};

/// Malformed input file. `line()` is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dataset does not match its declared schema (missing columns, bad labels).
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mdgan
