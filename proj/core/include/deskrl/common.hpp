#pragma once

#include <stdexcept>
#include <string>

namespace deskrl {

// Thrown when an operation receives arguments violating its preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown on malformed or out-of-range configuration. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when the dynamic-sampling filter empties the batch for more than
// the configured number of resample rounds. CLI exit code 3.
class StarvationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a loss or gradient turns non-finite. CLI exit code 4.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace deskrl
