#pragma once

#include <stdexcept>
#include <string>

namespace ergodrift {

// Base for every library error. The CLI maps ValidationError to exit code 2
// and NumericFailure to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition or malformed input.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed to reach its tolerance or produced non-finite output.
class NumericFailure : public Error {
public:
    using Error::Error;
};

/// Grid does not cover the effective support of a density or of the data.
class CoverageError : public ValidationError {
public:
    CoverageError(const std::string& what, double suggested_radius)
        : ValidationError(what), suggested_radius_(suggested_radius) {}

    /// Truncation radius M that would satisfy the coverage requirement (may be inf).
    double suggested_radius() const noexcept { return suggested_radius_; }

private:
    double suggested_radius_;
};

/// Grid spacing too large for the drift magnitude (h * sup|b| >= 1).
class GridTooCoarse : public ValidationError {
public:
    GridTooCoarse(const std::string& what, int suggested_points)
        : ValidationError(what), suggested_points_(suggested_points) {}

    int suggested_points() const noexcept { return suggested_points_; }

private:
    int suggested_points_;
};

/// Argument outside the mathematical domain of an operation (e.g. log of a zero density).
class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SimulationFailure : public NumericFailure {
public:
    using NumericFailure::NumericFailure;
};

class BudgetExceeded : public Error {
public:
    using Error::Error;
};

}  // namespace ergodrift
