#pragma once

#include <stdexcept>
#include <string>

namespace drcate {

// Input files or column selections that do not match what was asked for.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A cell that could not be read as a number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::string column)
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

// Values that violate a mathematical precondition (rank, range, finiteness).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid tuning parameters (draw counts, prior scales, levels).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace drcate
