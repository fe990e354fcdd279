#include "numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "error.hpp"

namespace ctax {

namespace {

void check_abscissae(const std::vector<double>& x, const std::vector<double>& y, const char* what) {
    if (x.size() != y.size())
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": x and y sizes differ");
    if (x.size() < 2)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": need at least two knots");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error(ErrorCode::InvalidArgument, std::string(what) + ": non-finite knot");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw Error(ErrorCode::InvalidArgument, std::string(what) + ": abscissae not strictly increasing");
    }
}

std::size_t find_segment(const std::vector<double>& x, double t) {
    if (!(t >= x.front() && t <= x.back()))
        throw Error(ErrorCode::OutOfRange, "evaluation point " + std::to_string(t) + " outside [" +
                                               std::to_string(x.front()) + ", " + std::to_string(x.back()) + "]");
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return 0;
    if (i >= x.size()) return x.size() - 2;
    return i - 1;
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    check_abscissae(x_, y_, "MonotoneCubic");
    const std::size_t n = x_.size();
    std::vector<double> d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    if (n == 2) {
        m_[0] = m_[1] = d[0];
        return;
    }
    // interior: weighted harmonic mean of neighbouring secants, zero at extrema
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) continue;
        double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
        double w1 = 2 * h1 + h0, w2 = h1 + 2 * h0;
        m_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
    // ends: one-sided three-point estimate, limited to preserve shape
    auto edge = [](double h0, double h1, double d0, double d1) {
        double m = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (m * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::fabs(m) > 3 * std::fabs(d0)) return 3 * d0;
        return m;
    };
    m_[0] = edge(x_[1] - x_[0], x_[2] - x_[1], d[0], d[1]);
    m_[n - 1] = edge(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], d[n - 2], d[n - 3]);
}

std::size_t MonotoneCubic::segment(double t) const { return find_segment(x_, t); }

double MonotoneCubic::value(double t) const {
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1;
    double h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2;
    double h11 = s3 - s2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
}

double MonotoneCubic::derivative(double t) const {
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s;
    double d00 = 6 * s2 - 6 * s;
    double d10 = 3 * s2 - 4 * s + 1;
    double d01 = -6 * s2 + 6 * s;
    double d11 = 3 * s2 - 2 * s;
    return (d00 * y_[i] + d01 * y_[i + 1]) / h + d10 * m_[i] + d11 * m_[i + 1];
}

double MonotoneCubic::second_derivative(double t) const {
    std::size_t i = segment(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double e00 = 12 * s - 6;
    double e10 = 6 * s - 4;
    double e01 = -12 * s + 6;
    double e11 = 6 * s - 2;
    return (e00 * y_[i] + e01 * y_[i + 1]) / (h * h) + (e10 * m_[i] + e11 * m_[i + 1]) / h;
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    check_abscissae(x_, y_, "CubicSpline");
    const std::size_t n = x_.size();
    std::vector<double> h(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];
    // second derivatives M, natural ends
    std::vector<double> M(n, 0.0);
    if (n > 2) {
        std::size_t m = n - 2;
        std::vector<double> diag(m), upper(m), rhs(m);
        for (std::size_t k = 0; k < m; ++k) {
            std::size_t i = k + 1;
            diag[k] = 2.0 * (h[i - 1] + h[i]);
            upper[k] = h[i];
            rhs[k] = 6.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
        }
        // Thomas algorithm, symmetric tridiagonal
        for (std::size_t k = 1; k < m; ++k) {
            double w = upper[k - 1] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        std::vector<double> sol(m);
        sol[m - 1] = rhs[m - 1] / diag[m - 1];
        for (std::size_t k = m - 1; k-- > 0;) sol[k] = (rhs[k] - upper[k] * sol[k + 1]) / diag[k];
        for (std::size_t k = 0; k < m; ++k) M[k + 1] = sol[k];
    }
    b_.resize(n - 1);
    c_.resize(n - 1);
    d_.resize(n - 1);
    cum_.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        c_[i] = 0.5 * M[i];
        d_[i] = (M[i + 1] - M[i]) / (6.0 * h[i]);
        b_[i] = (y_[i + 1] - y_[i]) / h[i] - h[i] * (2.0 * M[i] + M[i + 1]) / 6.0;
        double hh = h[i];
        cum_[i + 1] = cum_[i] + y_[i] * hh + b_[i] * hh * hh / 2 + c_[i] * hh * hh * hh / 3 + d_[i] * hh * hh * hh * hh / 4;
    }
}

std::size_t CubicSpline::segment(double t) const { return find_segment(x_, t); }

double CubicSpline::value(double t) const {
    std::size_t i = segment(t);
    double s = t - x_[i];
    if (s == 0.0) return y_[i];
    if (t == x_[i + 1]) return y_[i + 1];
    return y_[i] + s * (b_[i] + s * (c_[i] + s * d_[i]));
}

double CubicSpline::derivative(double t) const {
    std::size_t i = segment(t);
    double s = t - x_[i];
    return b_[i] + s * (2 * c_[i] + 3 * s * d_[i]);
}

double CubicSpline::second_derivative(double t) const {
    std::size_t i = segment(t);
    double s = t - x_[i];
    return 2 * c_[i] + 6 * s * d_[i];
}

double CubicSpline::integral(double t) const {
    std::size_t i = segment(t);
    double s = t - x_[i];
    return cum_[i] + s * (y_[i] + s * (b_[i] / 2 + s * (c_[i] / 3 + s * d_[i] / 4)));
}

std::vector<double> trapezoid_weights(const std::vector<double>& x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double h = x[i + 1] - x[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    return w;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
    if (x.size() != f.size()) throw Error(ErrorCode::GridMismatch, "trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    return s;
}

std::vector<double> cumulative_trapezoid(const std::vector<double>& x, const std::vector<double>& f) {
    std::vector<double> c(x.size(), 0.0);
    for (std::size_t i = 0; i + 1 < x.size(); ++i) c[i + 1] = c[i] + 0.5 * (x[i + 1] - x[i]) * (f[i] + f[i + 1]);
    return c;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw Error(ErrorCode::InvalidArgument, "log_grid: bad bounds");
    std::vector<double> g(n);
    double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

double find_root(const std::function<double(double)>& f, double a, double b, double fa, double fb, double rel_tol,
                 int max_iter) {
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw Error(ErrorCode::NoConvergence, "find_root: no sign change in bracket");
    std::uintmax_t it = static_cast<std::uintmax_t>(max_iter);
    auto tol = [rel_tol](double lo, double hi) {
        double scale = std::max(std::fabs(lo), std::fabs(hi));
        double eps = rel_tol > 0.0 ? rel_tol : 4.0 * std::numeric_limits<double>::epsilon();
        return std::fabs(hi - lo) <= eps * scale;
    };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, it);
    return 0.5 * (r.first + r.second);
}

double maximize_unimodal(const std::function<double(double)>& f, double a, double b) {
    auto neg = [&f](double t) { return -f(t); };
    std::uintmax_t it = 200;
    auto r = boost::math::tools::brent_find_minima(neg, a, b, std::numeric_limits<double>::digits / 2, it);
    return r.first;
}

}  // namespace ctax
