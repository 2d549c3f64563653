#pragma once

#include <span>
#include <string>

namespace shapederiv {

/// Least-squares slope of log(error) against log(step).
struct SlopeFit {
    /// All errors at or below the exactness threshold; slope is meaningless.
    bool exact = false;
    /// All errors exactly zero (implies exact).
    bool all_zero = false;
    double slope = 0.0;

    [[nodiscard]] std::string describe() const;
};

/// Fits log|errors| = slope·log(steps) + c. Errors at or below `exact_threshold`
/// everywhere yield an exact fit; a partial set of exact zeros is dropped from
/// the regression.
SlopeFit loglog_slope(std::span<const double> steps, std::span<const double> errors,
                      double exact_threshold = 0.0);

}  // namespace shapederiv
