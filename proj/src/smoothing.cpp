#include "smoothing.hpp"

#include <cmath>
#include <limits>

#include "error.hpp"

namespace ctax {

namespace {

// Reinsch form. Q is n x (n-2) tridiagonal, R is (n-2) x (n-2) tridiagonal.
// B = R + alpha Q'Q is symmetric pentadiagonal, stored by diagonals.
struct Band5 {
    std::vector<double> d0, d1, d2;  // main, first and second superdiagonals
};

struct Reinsch {
    std::size_t n = 0;
    std::vector<double> h;
    // Q column j (interior knot j+1) has entries at rows j, j+1, j+2
    std::vector<double> qa, qb, qc;
    Band5 R, QtQ;
    std::vector<double> Qty;
};

Reinsch setup(const std::vector<double>& x, const std::vector<double>& y) {
    Reinsch s;
    s.n = x.size();
    std::size_t m = s.n - 2;
    s.h.resize(s.n - 1);
    for (std::size_t i = 0; i + 1 < s.n; ++i) s.h[i] = x[i + 1] - x[i];
    s.qa.resize(m);
    s.qb.resize(m);
    s.qc.resize(m);
    s.R.d0.assign(m, 0.0);
    s.R.d1.assign(m, 0.0);
    s.R.d2.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        s.qa[j] = 1.0 / s.h[j];
        s.qb[j] = -1.0 / s.h[j] - 1.0 / s.h[j + 1];
        s.qc[j] = 1.0 / s.h[j + 1];
        s.R.d0[j] = (s.h[j] + s.h[j + 1]) / 3.0;
        if (j + 1 < m) s.R.d1[j] = s.h[j + 1] / 6.0;
    }
    s.QtQ.d0.assign(m, 0.0);
    s.QtQ.d1.assign(m, 0.0);
    s.QtQ.d2.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        s.QtQ.d0[j] = s.qa[j] * s.qa[j] + s.qb[j] * s.qb[j] + s.qc[j] * s.qc[j];
        if (j + 1 < m) s.QtQ.d1[j] = s.qb[j] * s.qa[j + 1] + s.qc[j] * s.qb[j + 1];
        if (j + 2 < m) s.QtQ.d2[j] = s.qc[j] * s.qa[j + 2];
    }
    s.Qty.resize(m);
    for (std::size_t j = 0; j < m; ++j) s.Qty[j] = s.qa[j] * y[j] + s.qb[j] * y[j + 1] + s.qc[j] * y[j + 2];
    return s;
}

// LDL' of a symmetric pentadiagonal matrix.
struct Ldl {
    std::vector<double> D, L1, L2;  // L(i+1,i), L(i+2,i)
};

Ldl factor(const Band5& B) {
    std::size_t m = B.d0.size();
    Ldl f;
    f.D.assign(m, 0.0);
    f.L1.assign(m, 0.0);
    f.L2.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double d = B.d0[i];
        if (i >= 1) d -= f.L1[i - 1] * f.L1[i - 1] * f.D[i - 1];
        if (i >= 2) d -= f.L2[i - 2] * f.L2[i - 2] * f.D[i - 2];
        if (!(d > 0.0)) throw Error(ErrorCode::SolverFailure, "smoothing spline: matrix not positive definite");
        f.D[i] = d;
        if (i + 1 < m) {
            double v = B.d1[i];
            if (i >= 1) v -= f.L1[i - 1] * f.L2[i - 1] * f.D[i - 1];
            f.L1[i] = v / d;
        }
        if (i + 2 < m) f.L2[i] = B.d2[i] / d;
    }
    return f;
}

std::vector<double> solve(const Ldl& f, std::vector<double> b) {
    std::size_t m = b.size();
    for (std::size_t i = 0; i < m; ++i) {
        if (i >= 1) b[i] -= f.L1[i - 1] * b[i - 1];
        if (i >= 2) b[i] -= f.L2[i - 2] * b[i - 2];
    }
    for (std::size_t i = 0; i < m; ++i) b[i] /= f.D[i];
    for (std::size_t i = m; i-- > 0;) {
        if (i + 1 < m) b[i] -= f.L1[i] * b[i + 1];
        if (i + 2 < m) b[i] -= f.L2[i] * b[i + 2];
    }
    return b;
}

// Band of the inverse (Hutchinson & de Hoog recursion).
Band5 inverse_band(const Ldl& f) {
    std::size_t m = f.D.size();
    Band5 S;
    S.d0.assign(m, 0.0);
    S.d1.assign(m, 0.0);
    S.d2.assign(m, 0.0);
    for (std::size_t i = m; i-- > 0;) {
        double l1 = i + 1 < m ? f.L1[i] : 0.0;
        double l2 = i + 2 < m ? f.L2[i] : 0.0;
        double s11 = i + 1 < m ? S.d0[i + 1] : 0.0;
        double s22 = i + 2 < m ? S.d0[i + 2] : 0.0;
        double s12 = i + 1 < m ? S.d1[i + 1] : 0.0;
        if (i + 2 < m) S.d2[i] = -l1 * s12 - l2 * s22;
        if (i + 1 < m) S.d1[i] = -l1 * s11 - l2 * s12;
        S.d0[i] = 1.0 / f.D[i] - l1 * S.d1[i] - l2 * S.d2[i];
    }
    return S;
}

struct Eval {
    std::vector<double> g;
    double rss = 0.0;
    double edf = 0.0;
    double gcv = 0.0;
};

Eval evaluate(const Reinsch& s, const std::vector<double>& y, double alpha) {
    std::size_t m = s.n - 2;
    Band5 B;
    B.d0.resize(m);
    B.d1.resize(m);
    B.d2.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        B.d0[j] = s.R.d0[j] + alpha * s.QtQ.d0[j];
        B.d1[j] = s.R.d1[j] + alpha * s.QtQ.d1[j];
        B.d2[j] = s.R.d2[j] + alpha * s.QtQ.d2[j];
    }
    Ldl f = factor(B);
    std::vector<double> gamma = solve(f, s.Qty);
    Eval e;
    e.g = y;
    for (std::size_t j = 0; j < m; ++j) {
        e.g[j] -= alpha * s.qa[j] * gamma[j];
        e.g[j + 1] -= alpha * s.qb[j] * gamma[j];
        e.g[j + 2] -= alpha * s.qc[j] * gamma[j];
    }
    for (std::size_t i = 0; i < s.n; ++i) e.rss += (y[i] - e.g[i]) * (y[i] - e.g[i]);
    Band5 S = inverse_band(f);
    double tr = 0.0;  // tr(B^-1 Q'Q)
    for (std::size_t j = 0; j < m; ++j) {
        tr += S.d0[j] * s.QtQ.d0[j];
        if (j + 1 < m) tr += 2.0 * S.d1[j] * s.QtQ.d1[j];
        if (j + 2 < m) tr += 2.0 * S.d2[j] * s.QtQ.d2[j];
    }
    double resid_df = alpha * tr;  // n - tr(A)
    e.edf = static_cast<double>(s.n) - resid_df;
    double n = static_cast<double>(s.n);
    e.gcv = resid_df > 0.0 ? n * e.rss / (resid_df * resid_df) : std::numeric_limits<double>::infinity();
    return e;
}

}  // namespace

SmoothingFit smoothing_spline(const std::vector<double>& x, const std::vector<double>& y, std::optional<double> alpha) {
    if (x.size() != y.size()) throw Error(ErrorCode::GridMismatch, "smoothing_spline: size mismatch");
    if (x.size() < 4) throw Error(ErrorCode::InsufficientSupport, "smoothing_spline: need at least 4 points");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
            throw Error(ErrorCode::InvalidArgument, "smoothing_spline: non-finite input");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "smoothing_spline: abscissae not strictly increasing");
    }
    Reinsch s = setup(x, y);
    SmoothingFit out;
    if (alpha) {
        if (!(*alpha >= 0.0)) throw Error(ErrorCode::InvalidArgument, "smoothing_spline: negative penalty");
        Eval e = evaluate(s, y, *alpha);
        out.spline = CubicSpline(x, e.g);
        out.alpha = *alpha;
        out.gcv = e.gcv;
        out.edf = e.edf;
        return out;
    }
    // penalty scale so that rho ~ 1 balances the two terms
    double trR = 0.0, trQ = 0.0;
    for (std::size_t j = 0; j < s.R.d0.size(); ++j) {
        trR += s.R.d0[j];
        trQ += s.QtQ.d0[j];
    }
    double scale = trR / trQ;
    auto score = [&](double logrho) { return evaluate(s, y, scale * std::pow(10.0, logrho)).gcv; };
    const double lo = -12.0, hi = 8.0, step = 0.25;
    double best_p = lo, best_v = std::numeric_limits<double>::infinity();
    for (double p = lo; p <= hi + 1e-12; p += step) {
        double v = score(p);
        if (v < best_v) {
            best_v = v;
            best_p = p;
        }
    }
    double a = std::max(lo, best_p - step), b = std::min(hi, best_p + step);
    double p = a < b ? maximize_unimodal([&](double t) { return -score(t); }, a, b) : best_p;
    if (score(p) > best_v) p = best_p;
    double al = scale * std::pow(10.0, p);
    Eval e = evaluate(s, y, al);
    out.spline = CubicSpline(x, e.g);
    out.alpha = al;
    out.gcv = e.gcv;
    out.edf = e.edf;
    return out;
}

}  // namespace ctax
