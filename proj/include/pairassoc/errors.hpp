#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pairassoc {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input, configuration or argument domain. The CLI maps this to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number of the offending record.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A computation could not produce a finite answer from otherwise valid input.
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// A margin has (numerically) zero centered variance, so a correlation is undefined.
class DegenerateVarianceError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

}  // namespace pairassoc
