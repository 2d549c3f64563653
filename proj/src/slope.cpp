#include "shapederiv/slope.hpp"

#include "shapederiv/error.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <vector>

namespace shapederiv {

std::string SlopeFit::describe() const {
    if (all_zero) return "exact (all errors 0)";
    if (exact) return "exact (all errors below tolerance)";
    return fmt::format("{:.17g}", slope);
}

SlopeFit loglog_slope(std::span<const double> steps, std::span<const double> errors, double exact_threshold) {
    if (steps.size() != errors.size()) {
        throw Error(ErrorKind::DimensionMismatch, "slope fit needs one error per step");
    }
    SlopeFit fit;
    bool all_zero = true;
    bool all_small = true;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const double e = std::abs(errors[i]);
        if (e != 0.0) all_zero = false;
        if (e > exact_threshold) all_small = false;
        if (e > 0.0) {
            xs.push_back(std::log(std::abs(steps[i])));
            ys.push_back(std::log(e));
        }
    }
    fit.all_zero = all_zero;
    fit.exact = all_zero || all_small;
    if (fit.exact) return fit;
    if (xs.size() < 2) {
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        return fit;
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    if (sxx == 0.0) {
        throw Error(ErrorKind::DimensionMismatch, "slope fit needs at least two distinct steps");
    }
    fit.slope = sxy / sxx;
    return fit;
}

}  // namespace shapederiv
