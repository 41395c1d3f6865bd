#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace prefgait {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input failed a domain invariant. `fields()` names every offending field.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> fields)
      : Error(what), fields_(std::move(fields)) {}
  explicit ValidationError(const std::string& what) : Error(what) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Operation invoked in a session phase that does not allow it.
class StateError : public Error {
 public:
  using Error::Error;
};

class UnsupportedInputError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Choice arrived before the exposure/washout schedule completed.
class TimingError : public Error {
 public:
  using Error::Error;
};

/// CSV/JSON parse failure; row and column are 1-based (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " (row " + std::to_string(row) + ", column " +
              std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

}  // namespace prefgait
