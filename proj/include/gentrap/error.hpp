#pragma once

#include <stdexcept>
#include <string>

namespace gentrap {

/// Base of every error raised by the library. The CLI maps subclasses onto
/// exit codes (config → 1, data → 2, divergence → 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingDivergence : public Error {
 public:
  using Error::Error;
};

}  // namespace gentrap
