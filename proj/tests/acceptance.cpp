// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"
#include "smoothing.hpp"
#include "solver.hpp"
#include "synthetic.hpp"

using namespace ctax;

namespace {

const double kDamage = 0.40;

struct Outcome {
    bool pass = true;
    std::ostringstream note;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [failed: " << what << "]";
        }
    }
};

SyntheticEconomy population(std::size_t n, UtilityFamily fam, double gamma) {
    UtilityParams u;
    u.family = fam;
    u.alpha0 = 0.1;
    u.gamma = gamma;
    u.w_ref = 60000.0;
    u.labor_elasticity = 0.33;
    TaxSystem tax;
    tax.income = IncomeTaxSchedule::linear(-8000.0, 0.3, 100.0, 1e7);
    tax.commodity = CommodityTax::linear(kDamage);
    return log_spaced_population(n, 15000.0, 300000.0, u, tax);
}

ExtractOptions with_damage() {
    ExtractOptions ex;
    ex.damage = kDamage;
    return ex;
}

const StatsProfile& bundled_profile() {
    static const StatsProfile p = [] {
        CalibrationData cal = bundled_calibration();
        Scenario s = find_scenario("benchmark");
        return run_pipeline(cal.cross_section, cal.survey, s.eps_z, s.eps_x).profile;
    }();
    return p;
}

const DriverResult& taste_optimum() {
    static const DriverResult r = solve_nonlinear_consistent(population(51, UtilityFamily::TasteShifted, 0.3), kDamage);
    return r;
}

void criterion1(Outcome& o) {
    double rate = pigouvian_rate({200.0, 2.0, 1.0});
    double gasoline = pigouvian_rate({200.0, 2.415, 1.0});
    o.require(rate == 0.40, "pigouvian_rate(200, 2.0, 1) == 0.40");
    o.require(std::fabs(gasoline - 0.483) <= 1e-15, "0.2 x 2.415 == 0.483");
    o.note << "rate " << rate << ", gasoline " << gasoline;
}

void criterion2(Outcome& o) {
    SyntheticEconomy ec = population(51, UtilityFamily::SeparableHomogeneous, 0.0);
    EconomyProfile ep = build_profile_from_economy(ec, with_damage());
    Solution nl = solve_nonlinear(ep.profile, kDamage);
    Solution lin = solve_linear(ep.profile, kDamage);
    double dev = std::fabs(lin.scalar_rate - kDamage);
    for (double r : nl.rate) dev = std::max(dev, std::fabs(r - kDamage));
    o.require(dev <= 1e-6, "rates within 1e-6 of damage");
    double grad = 0.0;
    std::size_t count = 0;
    for (std::size_t k : interior_cells(ep, 20)) {
        grad = std::max(grad, std::fabs(welfare_gradient(ec, ep, bump_between(ep, k), kDamage)));
        ++count;
    }
    o.require(grad < 1e-5, "distribution-neutral gradients below 1e-5");
    o.note << "max |rate - damage| " << dev << ", max |gradient| " << grad << " over " << count << " bumps";
}

void criterion3(Outcome& o) {
    const DriverResult& r = taste_optimum();
    double peak = 0.0;
    for (double e : r.profile.profile.eta_taste) peak = std::max(peak, std::fabs(e));
    double grad = 0.0;
    int restoring = 0, total = 0;
    for (std::size_t k : interior_cells(r.profile, 5)) {
        grad = std::max(grad, std::fabs(welfare_gradient(r.economy, r.profile, bump_between(r.profile, k), kDamage)));
        BumpReform around = bump_between(r.profile, k);
        for (double delta : {0.05, -0.05}) {
            std::vector<double> rates = r.solution.rate;
            for (std::size_t i = 0; i < rates.size(); ++i)
                if (around.tau_x_slope(r.profile.cell_x[i]) > 0.0) rates[i] += delta;
            SyntheticEconomy moved = r.economy;
            moved.tax.commodity = rate_schedule(r.profile.cell_x, rates);
            EconomyProfile ep = build_profile_from_economy(moved, with_damage());
            double g = welfare_gradient(moved, ep, bump_between(ep, k), kDamage);
            restoring += (delta > 0 ? g < 0.0 : g > 0.0) ? 1 : 0;
            ++total;
        }
    }
    o.require(peak > 0.2, "taste elasticity reaches about 0.3");
    o.require(grad < 1e-5, "bump gradients below 1e-5");
    o.require(restoring == total, "displaced rates restore");
    o.note << "peak |eta| " << peak << ", max |gradient| " << grad << ", restoring " << restoring << "/" << total;
}

void criterion4(Outcome& o) {
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::ostringstream shares;
    for (int rep = 0; rep < 3; ++rep) {
        UtilityParams up;
        up.family = UtilityFamily::TasteShifted;
        up.alpha0 = 0.05 + 0.1 * u(rng);
        up.gamma = -0.3 + 0.6 * u(rng);
        up.w_ref = 60000.0;
        up.labor_elasticity = 0.2 + 0.6 * u(rng);
        up.sigma_x = 0.7 + 1.3 * u(rng);
        TaxSystem tax;
        const double top = 0.25 + 0.2 * u(rng), bend = 0.1 + 0.15 * u(rng), scale = 30000.0 + 60000.0 * u(rng);
        std::vector<std::pair<double, double>> knots;
        for (double z = 500.0; z <= 2e6; z *= 1.3) knots.push_back({z, top * z - bend * scale * std::log1p(z / scale)});
        tax.income = IncomeTaxSchedule(knots);
        tax.commodity = CommodityTax::linear(0.1 + 0.4 * u(rng));
        SyntheticEconomy ec = log_spaced_population(51, 15000.0, 300000.0, up, tax);
        EconomyProfile ep = build_profile_from_economy(ec);
        std::size_t ok = 0;
        for (const AgentStats& a : ep.agents) {
            double rhs = -(a.choice.z * a.eps_z / (1.0 - a.mtr_z)) * a.x_inc;
            if (std::fabs(a.cross_base - rhs) <= 0.01 * std::fabs(rhs)) ++ok;
        }
        double share = static_cast<double>(ok) / static_cast<double>(ep.agents.size());
        o.require(share >= 0.95, "economy " + std::to_string(rep) + " share >= 95%");
        shares << (rep ? ", " : "") << share;
    }
    o.note << "share within 1%: " << shares.str();
}

void criterion5(Outcome& o) {
    Solution s = solve_nonlinear(bundled_profile(), kDamage);
    double gap = 0.0;
    for (std::size_t i = 0; i < s.rate.size(); ++i) gap = std::max(gap, std::fabs(s.rate[i] - s.closed_form[i]));
    o.require(gap <= 1e-10, "fixed point equals quadratic root");
    o.note << "max |fixed point - quadratic| " << gap << " over " << s.rate.size() << " points";
}

void criterion6(Outcome& o) {
    // profile with welfare weights from the taste-shifted economy at its status quo
    EconomyProfile ep = build_profile_from_economy(population(51, UtilityFamily::TasteShifted, 0.3), with_damage());
    Solution s = solve_optimal_levels(ep.profile, kDamage);
    StatsProfile q = ep.profile;
    q.mtr = s.income_rate;
    double worst = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        worst = std::max(worst, std::fabs(efficiency_residual(q, i, s.rate[i], s.income_rate[i], kDamage)));
    o.require(worst <= 1e-9, "levels satisfy the efficiency condition");
    o.note << "max residual " << worst << " over " << q.size() << " points";
}

void criterion7(Outcome& o) {
    SyntheticEconomy ec = population(51, UtilityFamily::TasteShifted, 0.2);
    ec.utility.sigma_x = 1.5;
    ec.theta_values = {-0.4, -0.2, 0.0, 0.2, 0.4};
    ec.theta_weights = {0.1, 0.2, 0.4, 0.2, 0.1};
    EconomyProfile ep = build_profile_from_economy(ec, with_damage());
    CovarianceReport cov = check_covariance_identities(ec, ep);
    o.require(cov.holds && cov.max_rel_error <= 1e-12, "covariance identity to 1e-12");

    StatsProfile p = bundled_profile();
    const std::vector<double> var = *p.var_x_inc;
    std::fill(p.var_x_inc->begin(), p.var_x_inc->end(), 0.0);
    double lin = solve_linear(p, kDamage).scalar_rate;
    double zero_gap = std::fabs(solve_multidim(p, kDamage).scalar_rate - lin);
    o.require(zero_gap <= 1e-12, "zero variance reproduces the linear rate");
    std::vector<double> devs;
    for (double k : {1.0, 2.0, 5.0, 10.0}) {
        for (std::size_t i = 0; i < var.size(); ++i) (*p.var_x_inc)[i] = k * var[i];
        devs.push_back(std::fabs(solve_multidim(p, kDamage).scalar_rate - kDamage));
    }
    bool decreasing = devs[1] < devs[0] && devs[2] < devs[1] && devs[3] < devs[2];
    o.require(decreasing, "deviation falls with variance scale 2, 5, 10");
    o.note << "identity error " << cov.max_rel_error << ", zero-variance gap " << zero_gap << ", |t - d| at x1,2,5,10: "
           << devs[0] << ", " << devs[1] << ", " << devs[2] << ", " << devs[3];
}

void criterion8(Outcome& o) {
    UtilityParams u;
    u.family = UtilityFamily::TasteShifted;
    u.alpha0 = 0.1;
    u.gamma = 0.3;
    u.w_ref = 60000.0;
    u.labor_elasticity = 0.33;
    TaxSystem tax;
    tax.income = IncomeTaxSchedule::linear(-8000.0, 0.3, 100.0, 1e7);
    tax.commodity = CommodityTax::linear(kDamage);
    SyntheticEconomy ec = log_spaced_population(100, 15000.0, 60000.0, u, tax);
    EconomyProfile ep = build_profile_from_economy(ec);
    CalibrationData cal = export_calibration(ec, ep);
    const StatsProfile p = run_pipeline(cal.cross_section, cal.survey, 0.33, 0.5).profile;
    std::vector<double> lz;
    for (double z : ep.profile.z()) lz.push_back(std::log(z));
    CubicSpline truth(lz, ep.profile.eta_taste);
    double worst = 0.0, peak = 0.0;
    for (std::size_t i = p.size() / 20; i < p.size() - p.size() / 20; ++i) {
        double t = truth.value(std::log(p.z()[i]));
        worst = std::max(worst, std::fabs(t - p.eta_taste[i]));
        peak = std::max(peak, std::fabs(t));
    }
    o.require(worst <= 5e-3, "taste elasticity within 5e-3");

    std::vector<double> z = log_grid(5000.0, 400000.0, 100), x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = 0.3 * std::pow(z[i], 0.7);
    std::vector<double> grid = log_grid(6000.0, 300000.0, 1000);
    SmoothedProfiles sp = smooth_profiles({z, x}, {grid, std::vector<double>(grid.size(), 0.03)}, grid, SmoothingConfig{});
    double exp_err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        exp_err = std::max(exp_err, std::fabs(sp.xhat_slope.value[i] * grid[i] / sp.xhat.value[i] - 0.7));
    o.require(exp_err <= 1e-3, "power-law exponent within 1e-3");
    o.note << "max |eta error| " << worst << " (peak |eta| " << peak << "), exponent error " << exp_err;
}

void criterion9(Outcome& o) {
    CalibrationData cal = bundled_calibration();
    const StatsProfile& p = bundled_profile();
    double lin = solve_linear(p, kDamage).scalar_rate;
    o.require(lin > 0.95 * kDamage && lin < kDamage, "linear rate in (0.95, 1.00) x damage");
    Solution nl = solve_nonlinear(p, kDamage);
    // mid-income: percentiles 50 to 80; top decile: above percentile 91's mean income
    double mid_lo = cal.cross_section.rows[49].mean_income, mid_hi = cal.cross_section.rows[79].mean_income;
    double top = cal.cross_section.rows[90].mean_income;
    double mid_max = -1.0, top_min = 2.0;
    for (std::size_t i = 0; i < nl.z.size(); ++i) {
        if (nl.z[i] >= mid_lo && nl.z[i] <= mid_hi) mid_max = std::max(mid_max, nl.rate[i]);
        if (nl.z[i] >= top) top_min = std::min(top_min, nl.rate[i]);
    }
    o.require(mid_max < kDamage, "below damage on the mid-income range");
    o.require(top_min > kDamage, "above damage in the top decile");
    o.note << "linear " << lin << " (" << lin / kDamage << " x damage), mid-income max " << mid_max << " on ["
           << mid_lo << ", " << mid_hi << "], top-decile min " << top_min << " above " << top;
}

void criterion10(Outcome& o) {
    SyntheticEconomy ec;
    ec.w_values = {60000.0};
    ec.w_weights = {1.0};
    ec.utility.alpha0 = 0.12;
    ec.utility.labor_elasticity = 0.4;
    ec.utility.sigma_x = 1.6;
    std::vector<std::pair<double, double>> knots;
    for (double z = 1000.0; z <= 400000.0; z *= 1.6) knots.push_back({z, 0.35 * z - 0.25 * 50000.0 * std::log1p(z / 50000.0)});
    ec.tax.income = IncomeTaxSchedule(knots);
    ec.tax.commodity = CommodityTax::linear(0.3);
    AgentType t{60000, 0, 1, 0, 0};
    AgentChoice base = solve_agent(ec, t);
    auto ratio = [](auto f, double h) { return richardson_ratio(f(h), f(h / 2), f(h / 4)); };
    double r[4] = {ratio([&](double h) { return extract_eps_z(ec, t, base, h, 1.0); }, 2e-2),
                   ratio([&](double h) { return extract_eps_x(ec, t, base, h, 1.0); }, 4e-2),
                   ratio([&](double h) { return extract_x_inc(ec, t, base, h, 1.0); }, 2e-2),
                   ratio([&](double h) { return extract_cross_base(ec, t, base, h, 1.0); }, 4e-2)};
    const char* names[4] = {"eps_z", "eps_x", "x_inc", "cross_base"};
    for (int i = 0; i < 4; ++i) {
        o.require(r[i] >= 3.5 && r[i] <= 4.5, std::string(names[i]) + " ratio in [3.5, 4.5]");
        o.note << (i ? ", " : "") << names[i] << " " << r[i];
    }
}

void bump_width_table() {
    const DriverResult& r = taste_optimum();
    std::printf("bump-width sensitivity at the self-consistent nonlinear optimum (max |gradient| over 5 bumps)\n");
    std::printf("  half-width cells   max |gradient|\n");
    for (double cells : {1.0, 2.0, 3.0, 4.0}) {
        double worst = 0.0;
        for (std::size_t k : interior_cells(r.profile, 5, cells))
            worst = std::max(worst, std::fabs(welfare_gradient(r.economy, r.profile, bump_between(r.profile, k, cells), kDamage)));
        std::printf("  %-17g  %.3e\n", cells, worst);
    }
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        double budget_s;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "Pigouvian calibration", 1.0, criterion1},
        {2, "separable collapse to the damage rate", 60.0, criterion2},
        {3, "stationarity of the nonlinear schedule", 300.0, criterion3},
        {4, "Slutsky symmetry of the cross-base response", 120.0, criterion4},
        {5, "fixed point and closed form agree", 10.0, criterion5},
        {6, "optimal levels satisfy the efficiency condition", 10.0, criterion6},
        {7, "multidimensional identity and attenuation", 120.0, criterion7},
        {8, "pipeline round trip", 60.0, criterion8},
        {9, "bundled calibration shape", 30.0, criterion9},
        {10, "finite-difference hygiene", 10.0, criterion10},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        Outcome o;
        auto start = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << " [exception: " << e.what() << "]";
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.note << " [over the " << c.budget_s << " s budget]";
        }
        failed += o.pass ? 0 : 1;
        std::printf("criterion %d %s: %s; %s (%.2f s)\n", c.id, o.pass ? "PASS" : "FAIL", c.title, o.note.str().c_str(), secs);
        std::fflush(stdout);
    }
    bump_width_table();
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
