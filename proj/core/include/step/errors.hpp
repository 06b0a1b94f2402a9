#pragma once

#include <stdexcept>
#include <string>

namespace step {

// Malformed input data: bad records, mismatched files, unknown nodes.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Non-finite values where finite ones are required (gradients, losses).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace step
