#pragma once

#include <stdexcept>
#include <string>

namespace paramtrack {

/// Invalid configuration: bad keys, missing parameters, out-of-range values.
/// CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numeric failure at run time (non-finite state, singular solve, ...).
/// CLI maps this to exit code 2.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A trajectory left the overflow guard box. Carries the model time at
/// which the first component crossed the guard.
class DivergenceError : public NumericError {
public:
    DivergenceError(double failure_time, const std::string& what)
        : NumericError(what), failure_time_(failure_time) {}

    double failure_time() const { return failure_time_; }

private:
    double failure_time_;
};

/// Degenerate calibration pair (equal targets or equal raw outputs).
class CalibrationError : public NumericError {
public:
    using NumericError::NumericError;
};

} // namespace paramtrack
