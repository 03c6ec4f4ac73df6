#pragma once

#include <stdexcept>

namespace sentaug {

// Invalid or inconsistent input data: malformed files, violated record
// invariants. The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric failure: non-finite losses, degenerate vectors. Exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unusable configuration (bad paths, inconsistent options). Exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sentaug
