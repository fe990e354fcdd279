#include "doctest.h"

#include <cmath>
#include <random>

#include "error.hpp"
#include "solver.hpp"

using namespace ctax;

namespace {

// lognormal-shaped profile on a log grid with constant statistics
StatsProfile flat_profile(std::size_t n, double eta, double eps_z, double eps_x, double mtr, double x_inc) {
    std::vector<double> z(n), dens(n);
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = 5000.0 * std::pow(100.0, static_cast<double>(i) / (n - 1));
        double l = std::log(z[i] / 50000.0);
        dens[i] = std::exp(-0.5 * l * l / 0.5) / z[i];
    }
    StatsProfile p;
    p.grid = IncomeGrid::normalized(z, dens);
    for (std::size_t i = 0; i < n; ++i) {
        p.xhat.push_back(0.05 * std::pow(z[i], 0.8));
        p.x_inc.push_back(x_inc);
        p.eps_z.push_back(eps_z);
        p.eps_x.push_back(eps_x);
        p.mtr.push_back(mtr);
        p.xhat_slope.push_back(0.0);
        p.eta_taste.push_back(eta);
    }
    // choose slopes so the decomposition reproduces eta
    for (std::size_t i = 0; i < n; ++i) p.xhat_slope[i] = p.x_inc[i] + eta * p.xhat[i] / z[i];
    p.enforce_identities();
    p.var_x_inc = std::vector<double>(n, 0.0);
    p.gbar_plus = std::vector<double>(n, 1.0);
    return p;
}

StatsProfile random_profile(std::mt19937& rng, std::size_t n, bool same_sign_eta) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    StatsProfile p = flat_profile(n, 0.0, 0.3, 0.8, 0.3, 0.0);
    double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = 0.6 * u(rng) - 0.3;
        if (same_sign_eta) eta = sign * (0.02 + 0.3 * u(rng));
        p.eps_z[i] = 0.1 + 0.6 * u(rng);
        p.eps_x[i] = 0.3 + 1.2 * u(rng);
        p.mtr[i] = -0.1 + 0.7 * u(rng);
        p.x_inc[i] = 0.05 * u(rng) * p.xhat[i] / p.z()[i];
        p.xhat_slope[i] = p.x_inc[i] + eta * p.xhat[i] / p.z()[i];
        (*p.var_x_inc)[i] = 0.0;
    }
    p.enforce_identities();
    return p;
}

}  // namespace

TEST_CASE("fixed point iteration") {
    SolveReport id = fixed_point([](double x) { return x; }, 3.0);
    CHECK(id.converged);
    CHECK(id.iterations == 1);
    CHECK(id.value == 3.0);
    SolveReport aff = fixed_point([](double x) { return 0.5 * x + 1.0; }, 0.0);
    CHECK(aff.converged);
    CHECK(std::fabs(aff.value - 2.0) < 1e-11);
    FixedPointOptions few;
    few.max_iter = 5;
    CHECK_THROWS_AS(fixed_point([](double x) { return x + 1.0; }, 0.0, few), Error);
    CHECK_THROWS_AS(fixed_point([](double x) { return x; }, std::nan("")), Error);
}

TEST_CASE("method names round trip") {
    for (Method m : {Method::Nonlinear, Method::Levels, Method::Linear, Method::Multidim, Method::MultidimPointwise})
        CHECK(parse_method(method_name(m)) == m);
    CHECK_THROWS_AS(parse_method("simplex"), Error);
}

TEST_CASE("no taste heterogeneity gives the damage rate in every solver") {
    StatsProfile p = flat_profile(40, 0.0, 0.3, 0.9, 0.35, 0.002);
    (*p.gbar_plus).assign(p.size(), 0.6);
    (*p.var_x_inc).assign(p.size(), 1e-7);
    const double d = 0.42;
    for (Method m : {Method::Nonlinear, Method::Levels, Method::MultidimPointwise}) {
        Solution s = solve(p, d, m);
        for (double r : s.rate) CHECK(std::fabs(r - d) < 1e-12);
    }
    for (Method m : {Method::Linear, Method::Multidim}) {
        Solution s = solve(p, d, m);
        CHECK(s.is_scalar());
        CHECK(std::fabs(s.scalar_rate - d) < 1e-12);
    }
}

TEST_CASE("pointwise fixed point agrees with the quadratic root") {
    std::mt19937 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        StatsProfile p = random_profile(rng, 30, false);
        Solution s = solve_nonlinear(p, 0.25);
        CHECK(s.report.converged);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::fabs(s.rate[i] - s.closed_form[i]) < 1e-10);
            CHECK(s.residual[i] < 1e-10);
        }
    }
}

TEST_CASE("sign of the deviation follows taste elasticity times the income tax rate") {
    std::mt19937 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        StatsProfile p = random_profile(rng, 20, false);
        Solution s = solve_nonlinear(p, 0.3);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double lhs = s.rate[i] - 0.3;
            double rhs = p.eta_taste[i] * p.mtr[i];
            if (std::fabs(rhs) < 1e-12) continue;
            CHECK((lhs > 0.0) == (rhs > 0.0));
        }
    }
    StatsProfile neg = flat_profile(5, -0.2, 0.3, 0.8, 0.3, 0.0);
    for (std::size_t i = 0; i < neg.size(); ++i) neg.x_inc[i] = 0.02 * neg.xhat[i] / neg.z()[i];
    neg.xhat_slope = neg.x_inc;
    for (std::size_t i = 0; i < neg.size(); ++i) neg.xhat_slope[i] += -0.2 * neg.xhat[i] / neg.z()[i];
    neg.enforce_identities();
    Solution s = solve_nonlinear(neg, 0.3);
    for (double r : s.rate) CHECK(r < 0.3);
}

TEST_CASE("income effect denominator amplifies positive and dampens negative deviations") {
    const double d = 0.2;
    for (double eta : {0.3, -0.3}) {
        StatsProfile p = flat_profile(10, eta, 0.4, 0.7, 0.4, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) p.x_inc[i] = 0.5 * p.xhat[i] / p.z()[i];
        for (std::size_t i = 0; i < p.size(); ++i) p.xhat_slope[i] = p.x_inc[i] + eta * p.xhat[i] / p.z()[i];
        p.enforce_identities();
        SolverOptions ablate;
        ablate.unit_denominator = true;
        Solution full = solve_nonlinear(p, d);
        Solution unit = solve_nonlinear(p, d, ablate);
        for (std::size_t i = 0; i < p.size(); ++i) {
            double a = full.rate[i] - d, b = unit.rate[i] - d;
            if (eta > 0) {
                CHECK(b > 0.0);
                CHECK(a > b);
            } else {
                CHECK(b < 0.0);
                CHECK(std::fabs(a) < std::fabs(b));
            }
        }
    }
}

TEST_CASE("denominator crossing zero is reported") {
    StatsProfile p = flat_profile(6, 2.0, 1.0, 0.1, 0.5, 0.0);
    // A = 40, A x_inc = 2
    for (std::size_t i = 0; i < p.size(); ++i) p.x_inc[i] = 0.05;
    for (std::size_t i = 0; i < p.size(); ++i) p.xhat_slope[i] = p.x_inc[i] + 2.0 * p.xhat[i] / p.z()[i];
    p.enforce_identities();
    try {
        solve_nonlinear(p, 0.1);
        FAIL("expected SingularDenominator");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularDenominator);
    }
    try {
        solve_linear(p, 0.1);
        FAIL("expected SingularDenominator");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SingularDenominator);
    }
}

TEST_CASE("optimal levels without redistributive motive") {
    StatsProfile p = flat_profile(30, 0.2, 0.3, 0.8, 0.3, 0.001);
    Solution s = solve_optimal_levels(p, 0.5);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::fabs(s.rate[i] - 0.5) < 1e-15);
        CHECK(std::fabs(s.income_rate[i] + (s.rate[i] - 0.5) * p.x_inc[i]) < 1e-15);
    }
}

TEST_CASE("optimal levels without taste heterogeneity") {
    StatsProfile p = flat_profile(30, 0.0, 0.3, 0.8, 0.3, 0.001);
    for (std::size_t i = 0; i < p.size(); ++i) (*p.gbar_plus)[i] = 0.3 + 0.6 * i / (p.size() - 1.0);
    Solution s = solve_optimal_levels(p, 0.5);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(s.rate[i] == 0.5);
        if (i + 1 < p.size()) CHECK(s.income_rate[i] > 0.0);
    }
}

TEST_CASE("optimal levels satisfy the efficiency condition") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        StatsProfile p = random_profile(rng, 40, false);
        // keep the hazard-weighted motive bounded in the thin lower tail
        const auto& h = p.grid.density();
        const auto& H = p.grid.cdf();
        for (std::size_t i = 0; i < p.size(); ++i)
            (*p.gbar_plus)[i] = 1.0 - 0.5 * u(rng) * p.z()[i] * h[i] / (1.0 - H[i] + 1e-3);
        Solution s = solve_optimal_levels(p, 0.35);
        StatsProfile q = p;
        q.mtr = s.income_rate;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(std::fabs(efficiency_residual(q, i, s.rate[i], s.income_rate[i], 0.35)) < 1e-9);
            CHECK(s.residual[i] < 1e-9);
        }
        // the same point is a fixed point of the nonlinear solver
        Solution nl = solve_nonlinear(q, 0.35);
        for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(nl.rate[i] - s.rate[i]) < 1e-9);
    }
}

TEST_CASE("optimal levels errors") {
    StatsProfile p = flat_profile(10, 0.2, 0.3, 0.8, 0.3, 0.0);
    p.gbar_plus.reset();
    CHECK_THROWS_AS(solve_optimal_levels(p, 0.1), Error);
    StatsProfile big = flat_profile(10, 50.0, 0.3, 0.05, 0.3, 0.0);
    (*big.gbar_plus).assign(big.size(), -5.0);
    try {
        solve_optimal_levels(big, 0.1);
        FAIL("expected RateOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RateOutOfRange);
    }
    StatsProfile tiny = flat_profile(3, 0.1, 0.3, 0.8, 0.3, 0.0);
    tiny.grid = IncomeGrid::normalized({1.0, 2.0, 3.0}, {1.0, 1e-15, 1.0});
    try {
        solve_optimal_levels(tiny, 0.1);
        FAIL("expected DegenerateHazard");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DegenerateHazard);
    }
}

TEST_CASE("constant statistics make the linear rate equal the pointwise rate") {
    StatsProfile p = flat_profile(50, -0.15, 0.35, 0.9, 0.32, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) p.x_inc[i] = 0.0;
    p.xhat_slope = p.x_inc;
    for (std::size_t i = 0; i < p.size(); ++i) p.xhat_slope[i] = -0.15 * p.xhat[i] / p.z()[i];
    p.enforce_identities();
    Solution lin = solve_linear(p, 0.4);
    Solution nl = solve_nonlinear(p, 0.4);
    for (double r : nl.rate) CHECK(std::fabs(lin.scalar_rate - r) < 1e-10);
    CHECK(std::fabs(lin.scalar_rate - lin.scalar_closed_form) < 1e-10);
}

TEST_CASE("linear rate lies within the range of pointwise rates when taste elasticity keeps its sign") {
    std::mt19937 rng(19);
    for (int rep = 0; rep < 30; ++rep) {
        StatsProfile p = random_profile(rng, 25, true);
        Solution lin = solve_linear(p, 0.3);
        Solution nl = solve_nonlinear(p, 0.3);
        double lo = *std::min_element(nl.rate.begin(), nl.rate.end());
        double hi = *std::max_element(nl.rate.begin(), nl.rate.end());
        CHECK(lin.scalar_rate >= lo - 1e-12);
        CHECK(lin.scalar_rate <= hi + 1e-12);
    }
}

TEST_CASE("multidimensional rate reduces to the linear rate without variance") {
    std::mt19937 rng(23);
    StatsProfile p = random_profile(rng, 40, false);
    Solution lin = solve_linear(p, 0.3);
    Solution md = solve_multidim(p, 0.3);
    CHECK(std::fabs(md.scalar_rate - lin.scalar_rate) < 1e-12);
    Solution nl = solve_nonlinear(p, 0.3);
    Solution mp = solve_multidim_pointwise(p, 0.3);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::fabs(nl.rate[i] - mp.rate[i]) < 1e-12);
}

TEST_CASE("within-income variance attenuates the multidimensional rate") {
    for (double eta : {0.25, -0.25}) {
        StatsProfile p = flat_profile(40, eta, 0.3, 0.8, 0.35, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p.x_inc[i] = 0.3 * p.xhat[i] / p.z()[i];
            p.xhat_slope[i] = p.x_inc[i] + eta * p.xhat[i] / p.z()[i];
        }
        p.enforce_identities();
        std::vector<double> base(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) base[i] = 0.01 * std::pow(p.x_inc[i], 2);
        double prev = std::fabs(solve_linear(p, 0.3).scalar_rate - 0.3);
        double prev_pt = std::fabs(solve_nonlinear(p, 0.3).rate[20] - 0.3);
        for (double k : {1.0, 2.0, 5.0, 10.0}) {
            for (std::size_t i = 0; i < p.size(); ++i) (*p.var_x_inc)[i] = k * base[i];
            double dev = std::fabs(solve_multidim(p, 0.3).scalar_rate - 0.3);
            double dev_pt = std::fabs(solve_multidim_pointwise(p, 0.3).rate[20] - 0.3);
            CHECK(dev < prev);
            CHECK(dev_pt < prev_pt);
            prev = dev;
            prev_pt = dev_pt;
        }
        (*p.var_x_inc)[3] = -1e-9;
        try {
            solve_multidim(p, 0.3);
            FAIL("expected NegativeVariance");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NegativeVariance);
        }
    }
}

TEST_CASE("closed form root is continuous at zero") {
    bool ok = false;
    CHECK(pareto_closed_form(0.3, 0.0, 0.0, &ok) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(ok);
    double small = pareto_closed_form(0.3, 1e-8, 1e-8, &ok);
    CHECK(ok);
    CHECK(std::fabs(small - 0.3) < 1e-7);
    pareto_closed_form(0.3, 0.0, 2.0, &ok);
    CHECK(!ok);
    // strongly negative denominator coefficient: B < 0 yet the positive root is admissible
    const double d = 0.4, num = -7.5e-4, coef = -0.83;
    double tau = pareto_closed_form(d, num, coef, &ok);
    CHECK(ok);
    double u = 1.0 + tau;
    CHECK(std::fabs((tau - d) - u * num / (1.0 - u * coef)) < 1e-14);
}
