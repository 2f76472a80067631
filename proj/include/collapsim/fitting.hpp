#pragma once

#include <cstddef>
#include <span>

namespace collapsim {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double r_squared = 1.0;
    std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. A series with no
/// variation about its mean is fitted exactly and reports R^2 = 1.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// OLS slope only; linear in y, so the slope of a mean series equals the mean
/// of per-series slopes.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace collapsim
