#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hyperslim {

// Base class for every error raised by the library. Validation problems
// (bad shapes, bad configs, malformed files) derive from it so callers such
// as the CLI can map them to a distinct exit status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

// Raised when an operand has the wrong extent along a named dimension.
class ShapeError : public ValidationError {
 public:
  ShapeError(std::string op, std::string dimension, std::size_t expected,
             std::size_t actual)
      : ValidationError(op + ": " + dimension + " mismatch (expected " +
                        std::to_string(expected) + ", got " +
                        std::to_string(actual) + ")"),
        op_(std::move(op)),
        dimension_(std::move(dimension)),
        expected_(expected),
        actual_(actual) {}

  const std::string& op() const { return op_; }
  const std::string& dimension() const { return dimension_; }
  std::size_t expected() const { return expected_; }
  std::size_t actual() const { return actual_; }

 private:
  std::string op_;
  std::string dimension_;
  std::size_t expected_;
  std::size_t actual_;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace hyperslim
