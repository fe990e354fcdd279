#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ctax {

// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson / Fritsch-Butland
// harmonic-mean slopes, as in PCHIP).
// Evaluation outside [x.front(), x.back()] throws OutOfRange.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::vector<double> x, std::vector<double> y);

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    const std::vector<double>& slopes() const { return m_; }
    double lower() const { return x_.front(); }
    double upper() const { return x_.back(); }

private:
    std::size_t segment(double t) const;
    std::vector<double> x_, y_, m_;
};

// Natural cubic spline (C2) with analytic antiderivative.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double value(double t) const;
    double derivative(double t) const;
    double second_derivative(double t) const;
    // integral from x.front() to t
    double integral(double t) const;

    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }
    double lower() const { return x_.front(); }
    double upper() const { return x_.back(); }

private:
    std::size_t segment(double t) const;
    std::vector<double> x_, y_;
    std::vector<double> b_, c_, d_;  // y + b t + c t^2 + d t^3 on each segment
    std::vector<double> cum_;        // integral up to x_[i]
};

// Trapezoid weights for nonuniform abscissae: sum_i w_i f_i ~ integral of f.
std::vector<double> trapezoid_weights(const std::vector<double>& x);
double trapezoid(const std::vector<double>& x, const std::vector<double>& f);
std::vector<double> cumulative_trapezoid(const std::vector<double>& x, const std::vector<double>& f);

std::vector<double> log_grid(double lo, double hi, std::size_t n);

// Root of f on [a, b] given a sign change; returns midpoint of the final bracket.
double find_root(const std::function<double(double)>& f, double a, double b, double fa, double fb,
                 double rel_tol = 0.0, int max_iter = 200);

// Maximize f on [a, b] assuming unimodality; returns argmax.
double maximize_unimodal(const std::function<double(double)>& f, double a, double b);

}  // namespace ctax
