#pragma once

#include <stdexcept>
#include <string>

namespace ecc {

// Misuse of an API: wrong shapes at call sites, backward on a non-scalar, etc.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent network or domain configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite losses or gradients during optimization.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed files. Carries the 1-based line number when known (0 otherwise).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Contradiction between a file header and its payload.
class DimensionError : public ParseError {
 public:
  using ParseError::ParseError;
};

// Requested input artifact does not exist.
class MissingInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric requested on a domain pair that cannot supply it.
class UnsupportedMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ecc
