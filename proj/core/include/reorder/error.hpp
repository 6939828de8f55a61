#pragma once

#include <stdexcept>
#include <string>

namespace reorder {

// Bad input, bad configuration, malformed file. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite loss, failed compressor call and similar runtime failures.
// Maps to CLI exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace reorder
