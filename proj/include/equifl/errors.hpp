#pragma once

#include <stdexcept>
#include <string>

namespace equifl {

// Configuration / validation problems. The CLI maps these to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declared columns missing, header mismatch, etc.
struct SchemaError : ConfigError {
  using ConfigError::ConfigError;
};

// Runtime problems. The CLI maps these (and anything unexpected) to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace equifl
