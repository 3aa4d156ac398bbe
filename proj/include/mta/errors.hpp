#pragma once

#include <stdexcept>
#include <string>

namespace mta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class NonFiniteError : public Error {
 public:
  using Error::Error;
};

class InconsistentClassesError : public Error {
 public:
  using Error::Error;
};

class DimensionTooLargeError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameters or scene configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Bundle I/O. FormatError and SizeMismatchError both map to exit code 3.
class FormatError : public Error {
 public:
  using Error::Error;
};

class SizeMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace mta
