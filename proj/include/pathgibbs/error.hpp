#pragma once

#include <stdexcept>
#include <string>

namespace pathgibbs {

/// Invalid configuration values (grid, potential parameters, sampler settings).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument that violates an operation's preconditions (off-grid time,
/// mismatched grids, misaligned block length).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-convergent quadrature, non-finite energy.
/// Carries the two competing estimates when they exist.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what, double first = 0.0, double second = 0.0)
        : std::runtime_error(what), first_(first), second_(second) {}

    double first_estimate() const noexcept { return first_; }
    double second_estimate() const noexcept { return second_; }

private:
    double first_;
    double second_;
};

} // namespace pathgibbs
