#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ppx {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad argument or precondition violation (maps to a usage error in the CLI).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input data that cannot be used: empty corpora, unusable selections, error budgets.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public DataError {
 public:
  using DataError::DataError;
};

/// Malformed text input, carrying the 1-based line where parsing stopped.
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Structurally valid input whose declared shape disagrees with its content.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

class CalibrationError : public DataError {
 public:
  CalibrationError(const std::string& what, double max_achievable)
      : DataError(what), max_achievable_(max_achievable) {}

  double max_achievable() const noexcept { return max_achievable_; }

 private:
  double max_achievable_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ppx
