#pragma once

#include <stdexcept>
#include <string>

namespace vckw {

// Invalid inputs: malformed files, shape mismatches, bad configuration.
// The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: divergence, non-finite values mid-computation.
// The CLI maps this to exit code 3.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vckw
