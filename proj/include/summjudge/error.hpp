#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace summjudge {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data or arguments (empty text, malformed tables, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Corpus file problem; `line()` is 1-based, 0 when not tied to a line.
class CorpusError : public ValidationError {
 public:
  CorpusError(const std::string& what, std::size_t line)
      : ValidationError(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ModelSetMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

}  // namespace summjudge
