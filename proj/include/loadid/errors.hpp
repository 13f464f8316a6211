#pragma once

#include <stdexcept>
#include <string>

namespace loadid {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid input: bad spec fields, malformed files, broken invariants.
struct ValidationError : Error {
    using Error::Error;
};

/// Numeric failure: infeasible configuration, divergence, failed solve.
struct NumericError : Error {
    using Error::Error;
};

/// Steady state or constraint set does not admit the requested operation.
struct InfeasibleError : NumericError {
    using NumericError::NumericError;
};

/// A state variable left the trusted range during integration.
struct DivergenceError : NumericError {
    using NumericError::NumericError;
};

/// Regression basis is numerically rank deficient (condition number too large).
struct RankDeficientError : NumericError {
    using NumericError::NumericError;
};

/// Filesystem / serialization failure.
struct IoError : Error {
    using Error::Error;
};

} // namespace loadid
