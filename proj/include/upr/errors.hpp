#pragma once

#include <stdexcept>
#include <string>

namespace upr {

// Bad inputs: malformed files, invariant violations, out-of-range parameters.
// The CLI maps this to exit code 2.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during computation (non-finite objective, singular
// system after fallback, degenerate statistics). CLI exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace upr
