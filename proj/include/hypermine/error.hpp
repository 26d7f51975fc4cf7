#pragma once

#include <stdexcept>
#include <string>

namespace hypermine {

/// Base class for every error raised by the library. Messages are meant to be
/// shown to the user verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (bad field count, bad number, bad JSON).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace hypermine
