#pragma once

#include <stdexcept>
#include <string>

namespace novelty {

// Input that violates a documented contract: malformed files, non-finite
// values, duplicate ids, out-of-range arguments.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public ValidationError {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : ValidationError("dimension mismatch: expected " +
                        std::to_string(expected) + ", got " +
                        std::to_string(actual)) {}
};

}  // namespace novelty
