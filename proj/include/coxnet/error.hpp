#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace coxnet {

// Base class for every error raised by the library. The C API maps the
// subclasses onto its stable status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad caller input: invalid configuration, unknown node, malformed spec.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed event-log or table input. `line()` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error(line == 0 ? reason
                        : "line " + std::to_string(line) + ": " + reason),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Overflow, NaN, empty risk set, or internal consistency failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace coxnet
