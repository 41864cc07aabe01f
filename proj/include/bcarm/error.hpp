#pragma once

#include <stdexcept>
#include <string>

namespace bcarm {

/// A distribution or model parameter is outside its support.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Vector or matrix sizes disagree.
class DimensionMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The autoregressive recursion produced a non-finite level (explosive parameters).
class NonFiniteRecursion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The sampler could not find a starting point with finite posterior.
class InitializationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No expectile level on the calibration grid reproduces the target violation rate.
class CalibrationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data could not be read or validated.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few violation days for a residual-based test.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bcarm
