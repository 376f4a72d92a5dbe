#pragma once

#include <stdexcept>
#include <string>

namespace hypomix {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched dimensions between operands.
struct DimensionError : Error {
    using Error::Error;
};

/// Violated precondition or invalid configuration value.
struct ValidationError : Error {
    using Error::Error;
};

/// Numerical method failed to converge or produced non-finite output.
struct NumericsError : Error {
    using Error::Error;
};

} // namespace hypomix
