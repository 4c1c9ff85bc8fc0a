#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace conseg {

/// Input violates a documented precondition or type invariant.
class ValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input. Line and column are 1-based; column 0 means the
/// whole line.
class ParseError : public ValidationError {
public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& message() const noexcept { return message_; }

private:
  std::size_t line_;
  std::size_t column_;
  std::string message_;
};

/// File system failure (missing input, unwritable output).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace conseg
