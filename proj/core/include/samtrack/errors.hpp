#pragma once

#include <stdexcept>
#include <string>

namespace samtrack {

// Maps to process exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input data. Exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or a solver that cannot proceed. Exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A mask binarized to nothing; callers typically fall back to the spatial
// map instead of aborting.
class EmptyMaskError : public DataError {
 public:
  using DataError::DataError;
};

// API misuse: calls out of order, mismatched shapes between stages.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace samtrack
