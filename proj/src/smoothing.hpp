#pragma once

#include <optional>
#include <vector>

#include "numerics.hpp"

namespace ctax {

// Cubic smoothing spline: minimizes sum (y_i - g(x_i))^2 + alpha * int g''^2.
struct SmoothingFit {
    CubicSpline spline;
    double alpha = 0.0;
    double gcv = 0.0;
    double edf = 0.0;  // trace of the hat matrix
};

// Fixed penalty when alpha is given, otherwise chosen by generalized cross-validation.
SmoothingFit smoothing_spline(const std::vector<double>& x, const std::vector<double>& y,
                              std::optional<double> alpha = std::nullopt);

}  // namespace ctax
