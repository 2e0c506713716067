#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace novas {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (exit code 2 at the command line).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or model specification (exit code 3).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConstantColumn : public DataError {
 public:
  explicit ConstantColumn(std::size_t column)
      : DataError("column " + std::to_string(column) + " has zero variance"), column_(column) {}
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t column_;
};

class BadSubset : public Error {
 public:
  using Error::Error;
};

class NonPositiveBandwidth : public Error {
 public:
  explicit NonPositiveBandwidth(double h)
      : Error("bandwidth must be positive, got " + std::to_string(h)) {}
};

/// Raised by relative_gain when the previous score is already zero.
class ZeroPreviousScore : public Error {
 public:
  ZeroPreviousScore() : Error("previous stage score is zero; perfect fit already reached") {}
};

class EmptyStage : public Error {
 public:
  using Error::Error;
};

class TooManySubsets : public Error {
 public:
  using Error::Error;
};

}  // namespace novas
