#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "error.hpp"

namespace ctax {

SolveReport fixed_point(const std::function<double(double)>& map, double seed, const FixedPointOptions& opt) {
    if (!std::isfinite(seed)) throw Error(ErrorCode::InvalidArgument, "fixed_point: seed must be finite");
    if (!(opt.damping > 0.0 && opt.damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fixed_point: damping in (0, 1]");
    SolveReport r;
    double x = seed;
    for (int it = 1; it <= opt.max_iter; ++it) {
        double fx = map(x);
        if (!std::isfinite(fx)) throw Error(ErrorCode::NoConvergence, "fixed_point: map returned a non-finite value");
        r.iterations = it;
        r.residual = std::fabs(fx - x);
        if (r.residual < opt.tol) {
            r.converged = true;
            r.value = x;
            return r;
        }
        x = (1.0 - opt.damping) * x + opt.damping * fx;
    }
    r.value = x;
    std::ostringstream os;
    os << "fixed_point: no convergence after " << opt.max_iter << " iterations, residual " << r.residual;
    throw Error(ErrorCode::NoConvergence, os.str());
}

const char* method_name(Method m) {
    switch (m) {
    case Method::Nonlinear: return "nonlinear";
    case Method::Levels: return "levels";
    case Method::Linear: return "linear";
    case Method::Multidim: return "multidim";
    case Method::MultidimPointwise: return "multidim-pointwise";
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    if (s == "nonlinear") return Method::Nonlinear;
    if (s == "levels") return Method::Levels;
    if (s == "linear") return Method::Linear;
    if (s == "multidim") return Method::Multidim;
    if (s == "multidim-pointwise") return Method::MultidimPointwise;
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + s + "'");
}

double pareto_closed_form(double damage, double num, double den_coef, bool* ok) {
    // M u^2 - (1 + D M - N) u + D = 0 with u = 1 + tau, D = 1 + damage
    const double D = 1.0 + damage;
    const double B = 1.0 + D * den_coef - num;
    double u;
    bool good = true;
    if (den_coef == 0.0) {
        good = (1.0 - num) > 0.0;
        u = D / (1.0 - num);
    } else {
        // with den_coef < 0 the admissible root has B + sqrt(disc) > 0 even when B < 0
        double disc = B * B - 4.0 * den_coef * D;
        good = disc >= 0.0 && B + std::sqrt(std::max(disc, 0.0)) > 0.0;
        u = good ? 2.0 * D / (B + std::sqrt(disc)) : std::numeric_limits<double>::quiet_NaN();
    }
    if (good && !(1.0 - u * den_coef > 0.0)) good = false;
    if (ok) *ok = good;
    return u - 1.0;
}

double efficiency_residual(const StatsProfile& p, std::size_t i, double rate, double mtr, double damage) {
    double wedge = rate - damage;
    return wedge / (1.0 + rate) - p.eta_taste[i] * p.eps_z[i] / p.eps_x[i] * (mtr + wedge * p.x_inc[i]) / (1.0 - mtr);
}

namespace {

void require_profile(const StatsProfile& p) {
    p.validate();
    if (p.size() == 0) throw Error(ErrorCode::InvalidArgument, "solver: empty profile");
}

// pointwise fixed point of tau - d = u N / (1 - u M), u = 1 + tau
struct PointResult {
    double rate, closed;
    SolveReport report;
};

PointResult solve_point(double damage, double num, double den_coef, double z, const FixedPointOptions& fp) {
    auto map = [&](double tau) {
        double u = 1.0 + tau;
        double den = 1.0 - u * den_coef;
        if (!(den > 0.0)) {
            std::ostringstream os;
            os << "denominator 1 - RR x_inc reaches " << den << " at z=" << z;
            throw Error(ErrorCode::SingularDenominator, os.str());
        }
        return damage + u * num / den;
    };
    PointResult r;
    r.report = fixed_point(map, damage, fp);
    r.rate = r.report.value;
    bool ok = false;
    r.closed = pareto_closed_form(damage, num, den_coef, &ok);
    if (!ok) {
        std::ostringstream os;
        os << "no admissible quadratic root at z=" << z;
        throw Error(ErrorCode::SingularDenominator, os.str());
    }
    return r;
}

Solution pointwise(const StatsProfile& p, double damage, Method method, const SolverOptions& opt) {
    require_profile(p);
    if (method == Method::MultidimPointwise && !p.var_x_inc)
        throw Error(ErrorCode::InvalidArgument, "solver: multidimensional method needs var_x_inc");
    Solution s;
    s.method = method;
    s.damage = damage;
    s.z = p.z();
    std::vector<std::string> failed;
    int iters = 0;
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double net = 1.0 - p.mtr[i];
        const double a = p.eta_taste[i] * p.eps_z[i] / (p.eps_x[i] * net);
        double num = a * p.mtr[i];
        double den_coef = opt.unit_denominator ? 0.0 : a * p.x_inc[i];
        if (method == Method::MultidimPointwise) {
            double v = (*p.var_x_inc)[i];
            if (v < 0.0) throw Error(ErrorCode::NegativeVariance, "solver: negative var_x_inc");
            den_coef -= p.eps_z[i] * p.z()[i] / (p.eps_x[i] * p.xhat[i] * net) * v;
        }
        try {
            PointResult r = solve_point(damage, num, den_coef, p.z()[i], opt.fixed_point);
            s.rate.push_back(r.rate);
            s.closed_form.push_back(r.closed);
            iters = std::max(iters, r.report.iterations);
            worst = std::max(worst, r.report.residual);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoConvergence) throw;
            failed.push_back(std::to_string(p.z()[i]));
            s.rate.push_back(std::numeric_limits<double>::quiet_NaN());
            s.closed_form.push_back(std::numeric_limits<double>::quiet_NaN());
        }
    }
    if (!failed.empty()) {
        std::string list;
        for (std::size_t k = 0; k < failed.size() && k < 20; ++k) list += (k ? "," : "") + failed[k];
        throw Error(ErrorCode::NoConvergence, "solve: no convergence at z=" + list);
    }
    for (std::size_t i = 0; i < p.size(); ++i)
        s.residual.push_back(method == Method::Nonlinear && !opt.unit_denominator
                                 ? std::fabs(efficiency_residual(p, i, s.rate[i], p.mtr[i], damage))
                                 : std::fabs(s.rate[i] - s.closed_form[i]));
    s.report.converged = true;
    s.report.iterations = iters;
    s.report.residual = std::max(worst, *std::max_element(s.residual.begin(), s.residual.end()));
    s.report.branch_note = "fixed point seeded at damage; quadratic root continuous at zero taste elasticity";
    return s;
}

Solution scalar(const StatsProfile& p, double damage, Method method, const SolverOptions& opt) {
    require_profile(p);
    LinearTerms lt = linear_terms(p);
    double var = 0.0;
    if (method == Method::Multidim) {
        if (!p.var_x_inc) throw Error(ErrorCode::InvalidArgument, "solver: multidimensional method needs var_x_inc");
        for (double v : *p.var_x_inc)
            if (v < 0.0) throw Error(ErrorCode::NegativeVariance, "solver: negative var_x_inc");
        var = lt.var;
    }
    double den_coef = opt.unit_denominator ? 0.0 : lt.den - var;
    auto map = [&](double t) {
        double u = 1.0 + t;
        double den = 1.0 - u * den_coef;
        if (!(den > 0.0)) throw Error(ErrorCode::SingularDenominator, "solve: aggregate denominator is not positive");
        return damage + u * lt.num / den;
    };
    Solution s;
    s.method = method;
    s.damage = damage;
    s.report = fixed_point(map, damage, opt.fixed_point);
    s.scalar_rate = s.report.value;
    bool ok = false;
    s.scalar_closed_form = pareto_closed_form(damage, lt.num, den_coef, &ok);
    if (!ok) throw Error(ErrorCode::SingularDenominator, "solve: no admissible quadratic root");
    s.report.branch_note = "fixed point seeded at damage; quadratic root continuous at zero taste elasticity";
    return s;
}

}  // namespace

LinearTerms linear_terms(const StatsProfile& p) {
    const std::size_t n = p.size();
    std::vector<double> base(n), num(n), den(n), var(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double net = 1.0 - p.mtr[i];
        base[i] = p.eps_x[i] * p.xhat[i];
        double k = p.eta_taste[i] * p.eps_z[i] * p.xhat[i] / net;
        num[i] = k * p.mtr[i];
        den[i] = k * p.x_inc[i];
        if (p.var_x_inc) var[i] = p.eps_z[i] * p.z()[i] / net * (*p.var_x_inc)[i];
    }
    LinearTerms t;
    t.base = p.grid.expectation(base);
    if (!(t.base > 0.0)) throw Error(ErrorCode::SingularDenominator, "solve: E[eps_x xhat] must be positive");
    t.num = p.grid.expectation(num) / t.base;
    t.den = p.grid.expectation(den) / t.base;
    t.var = p.grid.expectation(var) / t.base;
    return t;
}

Solution solve_nonlinear(const StatsProfile& profile, double damage, const SolverOptions& opt) {
    return pointwise(profile, damage, Method::Nonlinear, opt);
}

Solution solve_multidim_pointwise(const StatsProfile& profile, double damage, const SolverOptions& opt) {
    return pointwise(profile, damage, Method::MultidimPointwise, opt);
}

Solution solve_linear(const StatsProfile& profile, double damage, const SolverOptions& opt) {
    return scalar(profile, damage, Method::Linear, opt);
}

Solution solve_multidim(const StatsProfile& profile, double damage, const SolverOptions& opt) {
    return scalar(profile, damage, Method::Multidim, opt);
}

Solution solve_optimal_levels(const StatsProfile& p, double damage) {
    require_profile(p);
    if (!p.gbar_plus) throw Error(ErrorCode::InvalidArgument, "solve_optimal_levels: profile lacks gbar_plus");
    Solution s;
    s.method = Method::Levels;
    s.damage = damage;
    s.z = p.z();
    const auto& h = p.grid.density();
    const auto& H = p.grid.cdf();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double z = p.z()[i];
        const double zh = z * h[i];
        if (zh < 1e-12) throw Error(ErrorCode::DegenerateHazard, "solve_optimal_levels: z h_z vanishes at z=" + std::to_string(z));
        double hazard = std::max(0.0, 1.0 - H[i]) / zh * (1.0 - (*p.gbar_plus)[i]);
        double c = p.eta_taste[i] / p.eps_x[i] * hazard;
        if (c >= 1.0) throw Error(ErrorCode::RateOutOfRange, "solve_optimal_levels: commodity condition has no rate at z=" + std::to_string(z));
        double tau = (damage + c) / (1.0 - c);
        double k = hazard / p.eps_z[i];
        double mtr = (k - (tau - damage) * p.x_inc[i]) / (1.0 + k);
        s.rate.push_back(tau);
        s.income_rate.push_back(mtr);
        s.residual.push_back(std::fabs(efficiency_residual(p, i, tau, mtr, damage)));
    }
    s.report.converged = true;
    s.report.iterations = 1;
    s.report.residual = *std::max_element(s.residual.begin(), s.residual.end());
    s.report.branch_note = "closed-form rearrangement of the level conditions";
    return s;
}

Solution solve(const StatsProfile& profile, double damage, Method method, const SolverOptions& opt) {
    switch (method) {
    case Method::Nonlinear: return solve_nonlinear(profile, damage, opt);
    case Method::Levels: return solve_optimal_levels(profile, damage);
    case Method::Linear: return solve_linear(profile, damage, opt);
    case Method::Multidim: return solve_multidim(profile, damage, opt);
    case Method::MultidimPointwise: return solve_multidim_pointwise(profile, damage, opt);
    }
    throw Error(ErrorCode::InvalidArgument, "solve: unknown method");
}

}  // namespace ctax
