#pragma once

#include <stdexcept>
#include <string>

namespace augpt {

// Bad input data or file schema (manifests, CSV, checkpoints, alignment
// mismatches). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss/gradient or degenerate numeric state (zero-norm feature,
// NaN in an update). CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration: unknown key, missing required value, inconsistent
// mode flags. CLI exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace augpt
