#pragma once

#include <stdexcept>
#include <string>

namespace cmsa {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or extent contract violation.
class DimError : public Error {
 public:
  using Error::Error;
};

/// API misuse: non-scalar loss, unknown mode string, scalar access on a
/// non-scalar tensor.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Token id outside the closed vocabulary.
class VocabError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents; the message carries file (and line) context.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Scene generation could not satisfy its constraints within the retry budget.
class GenError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable/unwritable file.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cmsa
