#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evsi {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (z outside (0,1),
// nonpositive beta parameters, negative counts, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or degenerate input data. Carries the 1-based line number when the
// problem can be attributed to a line of an input file (0 otherwise).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A numerical or computational guard tripped (enumeration too large, all
// importance weights zero, ...).
class GuardError : public Error {
 public:
  using Error::Error;
};

}  // namespace evsi
