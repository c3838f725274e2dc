#pragma once

#include <stdexcept>
#include <string>

namespace oodgate {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto its exit-status contract (2 validation, 3 I/O, 4 numerical).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input, violated invariant, or inconsistent configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Factorization failure or similar numerical breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace oodgate
