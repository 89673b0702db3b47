#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prodmatch {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument outside the mathematical domain of an operation
/// (non-positive price, p_model = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
      : Error(what + ": expected dimension " + std::to_string(expected) + ", got " +
              std::to_string(actual)),
        expected_(expected),
        actual_(actual) {}

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

/// Malformed input file. `line` is 1-based; 0 when not line oriented.
class FormatError : public Error {
 public:
  FormatError(const std::string& source, std::size_t line, const std::string& detail)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + detail),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A metric whose denominator is empty.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// A request that conflicts with current state (double vote, vote on a
/// completed row, duplicate id).
class ConflictError : public Error {
 public:
  using Error::Error;
};

}  // namespace prodmatch
