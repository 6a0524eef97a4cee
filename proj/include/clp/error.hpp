#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace clp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters, unknown tags, probabilities outside [0,1].
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Inputs that are well-formed but violate a structural requirement
// (asymmetric matrix in undirected mode, shape mismatch, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file, std::size_t line, std::size_t column, const std::string& what)
      : ValidationError(file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// A row has too few observed entries to be split.
class RowDegenerateError : public Error {
 public:
  using Error::Error;
};

// |calib| < r0, or a block too large for the calibration set.
class InsufficientCalibrationError : public Error {
 public:
  using Error::Error;
};

// Scoring found a coordinate outside the test set: a pipeline bug.
class AccountingError : public Error {
 public:
  using Error::Error;
};

// Simulation-only operation called without latent positions.
class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

// Files that cannot be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace clp
