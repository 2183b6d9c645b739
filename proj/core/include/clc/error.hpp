#pragma once

#include <stdexcept>
#include <string>

namespace clc {

/// Objects that do not compose: missing kernel rows, mismatched supports,
/// language chains that do not line up.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value outside its admissible range (non-positive temperature, empty grid,
/// zero step size, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. The message names the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedVersionError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// A structurally well-formed object that breaks one of its invariants.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace clc
