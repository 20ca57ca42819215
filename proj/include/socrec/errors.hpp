#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace socrec {

// Operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input outside the mathematical domain of an operation (e.g. zero-width softmax row).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Caller broke an API contract (e.g. backward() on a non-scalar node).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A computation produced or consumed a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A level (like / follow) has no rows where at least one is required.
class EmptyLevelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Item or user id outside the table it indexes.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A metric is undefined for the given input (no positives, no negatives...).
class UndefinedMetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Bad configuration value or unknown key.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace socrec
