// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace bip {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid configuration object (bad solver name, nonpositive epsilon, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Structurally invalid data or arguments (dimension mismatch, empty cloud,
// nonpositive values where positivity is required, ...).
struct DomainError : Error {
  using Error::Error;
};

// Numerical failure at runtime: solver non-convergence, degenerate weights,
// non-finite intermediate values.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace bip
