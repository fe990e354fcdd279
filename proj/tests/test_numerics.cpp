#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "error.hpp"
#include "numerics.hpp"
#include "smoothing.hpp"

using namespace ctax;

TEST_CASE("monotone cubic reproduces knots and linear data") {
    MonotoneCubic m({0.0, 1.0, 3.0, 4.0}, {0.0, 2.0, 6.0, 8.0});
    CHECK(m.value(1.0) == 2.0);
    CHECK(m.value(4.0) == 8.0);
    CHECK(m.value(2.0) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(m.derivative(2.5) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(m.second_derivative(2.5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(m.value(-0.1), Error);
    CHECK_THROWS_AS(m.value(4.1), Error);
}

TEST_CASE("monotone cubic preserves monotonicity of steep data") {
    std::vector<double> x = {0, 1, 2, 3, 4, 5}, y = {0, 0.01, 0.02, 3.0, 3.01, 3.02};
    MonotoneCubic m(x, y);
    double prev = m.value(0.0);
    for (int i = 1; i <= 500; ++i) {
        double v = m.value(5.0 * i / 500.0);
        CHECK(v >= prev - 1e-15);
        prev = v;
    }
}

TEST_CASE("monotone cubic refit of its own samples is idempotent") {
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        x.push_back(i);
        y.push_back(std::sqrt(1.0 + i) + 0.1 * i);
    }
    MonotoneCubic a(x, y);
    std::vector<double> ys;
    for (double t : x) ys.push_back(a.value(t));
    MonotoneCubic b(x, ys);
    for (double t = 0.0; t <= 20.0; t += 0.37) CHECK(std::fabs(a.value(t) - b.value(t)) <= 1e-12 * std::fabs(a.value(t)));
}

TEST_CASE("natural cubic spline: interpolation, derivative and integral") {
    std::vector<double> x, y;
    for (int i = 0; i <= 40; ++i) {
        double t = 0.1 * i;
        x.push_back(t);
        y.push_back(std::sin(t));
    }
    CubicSpline s(x, y);
    CHECK(s.value(x[7]) == y[7]);
    CHECK(s.value(1.234) == doctest::Approx(std::sin(1.234)).epsilon(1e-5));
    CHECK(s.derivative(2.0) == doctest::Approx(std::cos(2.0)).epsilon(1e-4));
    CHECK(s.integral(3.0) == doctest::Approx(1.0 - std::cos(3.0)).epsilon(1e-5));
    // integral consistent with derivative of the integral
    double h = 1e-6;
    CHECK((s.integral(1.7 + h) - s.integral(1.7 - h)) / (2 * h) == doctest::Approx(s.value(1.7)).epsilon(1e-8));
}

TEST_CASE("natural cubic spline is exact on linear data") {
    CubicSpline s({1, 2, 4, 7}, {3, 5, 9, 15});
    CHECK(s.value(5.5) == doctest::Approx(12.0).epsilon(1e-14));
    CHECK(s.derivative(6.0) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("trapezoid helpers") {
    std::vector<double> x = {0.0, 1.0, 3.0};
    std::vector<double> f = {1.0, 1.0, 1.0};
    CHECK(trapezoid(x, f) == 3.0);
    auto w = trapezoid_weights(x);
    CHECK(w[0] == 0.5);
    CHECK(w[1] == 1.5);
    CHECK(w[2] == 1.0);
    auto c = cumulative_trapezoid(x, f);
    CHECK(c[2] == 3.0);
}

TEST_CASE("log grid has constant ratios") {
    auto g = log_grid(600.0, 325000.0, 1000);
    CHECK(g.front() == 600.0);
    CHECK(g.back() == 325000.0);
    double r0 = g[1] / g[0];
    for (std::size_t i = 1; i + 1 < g.size(); ++i) CHECK(std::fabs(g[i + 1] / g[i] - r0) < 1e-12);
}

TEST_CASE("root finder reaches machine precision") {
    auto f = [](double t) { return t * t - 2.0; };
    double r = find_root(f, 0.0, 2.0, f(0.0), f(2.0));
    CHECK(std::fabs(r - std::sqrt(2.0)) < 1e-15);
    CHECK_THROWS_AS(find_root(f, 2.0, 3.0, f(2.0), f(3.0)), Error);
}

namespace {

// dense reference: g = (I + alpha Q R^-1 Q')^-1 y
Eigen::VectorXd dense_smoother(const std::vector<double>& x, const std::vector<double>& y, double alpha, double* trace) {
    int n = static_cast<int>(x.size());
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n - 2), R = Eigen::MatrixXd::Zero(n - 2, n - 2);
    for (int j = 0; j < n - 2; ++j) {
        double h0 = x[j + 1] - x[j], h1 = x[j + 2] - x[j + 1];
        Q(j, j) = 1 / h0;
        Q(j + 1, j) = -1 / h0 - 1 / h1;
        Q(j + 2, j) = 1 / h1;
        R(j, j) = (h0 + h1) / 3;
        if (j + 1 < n - 2) {
            R(j, j + 1) = h1 / 6;
            R(j + 1, j) = h1 / 6;
        }
    }
    Eigen::MatrixXd K = Q * R.inverse() * Q.transpose();
    Eigen::MatrixXd A = (Eigen::MatrixXd::Identity(n, n) + alpha * K).inverse();
    *trace = A.trace();
    Eigen::VectorXd yy(n);
    for (int i = 0; i < n; ++i) yy(i) = y[i];
    return A * yy;
}

}  // namespace

TEST_CASE("smoothing spline matches a dense hat-matrix computation") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
        double t = 0.1 * i + 0.01 * (i % 3);
        x.push_back(t);
        y.push_back(std::sin(2 * t) + noise(rng));
    }
    double alpha = 0.05;
    SmoothingFit fit = smoothing_spline(x, y, alpha);
    double tr = 0.0;
    Eigen::VectorXd g = dense_smoother(x, y, alpha, &tr);
    for (int i = 0; i < 30; ++i) CHECK(fit.spline.value(x[i]) == doctest::Approx(g(i)).epsilon(1e-9));
    CHECK(fit.edf == doctest::Approx(tr).epsilon(1e-9));
}

TEST_CASE("smoothing spline limits") {
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(i);
        y.push_back(std::cos(0.3 * i));
    }
    SmoothingFit interp = smoothing_spline(x, y, 0.0);
    for (int i = 0; i < 20; ++i) CHECK(interp.spline.value(x[i]) == doctest::Approx(y[i]).epsilon(1e-12));
    SmoothingFit flat = smoothing_spline(x, y, 1e12);
    CHECK(flat.edf == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(std::fabs(flat.spline.second_derivative(7.5)) < 1e-8);
    CHECK_THROWS_AS(smoothing_spline({0, 1, 2}, {0, 1, 2}), Error);
}

TEST_CASE("GCV selects a penalty that removes noise") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> noise(0.0, 0.05);
    std::vector<double> x, y, truth;
    for (int i = 0; i < 200; ++i) {
        double t = i / 199.0;
        x.push_back(t);
        truth.push_back(std::sin(3 * t));
        y.push_back(truth.back() + noise(rng));
    }
    SmoothingFit fit = smoothing_spline(x, y);
    double err = 0.0, raw = 0.0;
    for (int i = 0; i < 200; ++i) {
        err += std::pow(fit.spline.value(x[i]) - truth[i], 2);
        raw += std::pow(y[i] - truth[i], 2);
    }
    CHECK(err < 0.2 * raw);
    CHECK(fit.edf > 2.0);
    CHECK(fit.edf < 30.0);
}
