#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace topogs {

// Error hierarchy. The CLI maps each family onto a stable exit code:
// UsageError -> 1, DataError/ParseError -> 2, NumericalError -> 3.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation was violated.
class PreconditionError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Input data is unusable (wrong shape, degenerate, missing file).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  enum class Kind { MissingFile, EmptyFile, RaggedRow, NonNumeric, BadHeader };

  ParseError(Kind kind, std::size_t row, std::size_t column, const std::string& what)
      : DataError(what), kind_(kind), row_(row), column_(column) {}

  Kind kind() const noexcept { return kind_; }
  // 1-based data row (header excluded) and 1-based column; 0 when not applicable.
  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t row_;
  std::size_t column_;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace topogs
