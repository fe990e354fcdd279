#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "error.hpp"

namespace ctax {

SyntheticEconomy log_spaced_population(std::size_t n, double w_lo, double w_hi, const UtilityParams& utility,
                                       const TaxSystem& tax) {
    if (n < 2 || !(w_lo > 0.0) || !(w_hi > w_lo))
        throw Error(ErrorCode::InvalidArgument, "log_spaced_population: need n >= 2 and 0 < w_lo < w_hi");
    SyntheticEconomy ec;
    ec.w_values = log_grid(w_lo, w_hi, n);
    ec.w_weights.assign(n, 1.0 / static_cast<double>(n));
    ec.utility = utility;
    ec.tax = tax;
    ec.validate();
    return ec;
}

CalibrationData export_calibration(const SyntheticEconomy& economy, const EconomyProfile& ep) {
    const std::size_t nw = economy.w_values.size(), nt = economy.theta_count();
    if (ep.agents.size() != nw * nt) throw Error(ErrorCode::InvalidArgument, "export_calibration: profile does not match economy");
    double total = std::accumulate(economy.w_weights.begin(), economy.w_weights.end(), 0.0);
    CalibrationData out;
    double cum = 0.0;
    for (std::size_t i = 0; i < nw; ++i) {
        double share = economy.w_weights[i] / total;
        if (share < 0.01 - 1e-12) throw Error(ErrorCode::InvalidArgument, "export_calibration: cells below one percent of mass");
        double mid = cum + 0.5 * share;
        cum += share;
        double mass = 0.0, after_tax = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            const auto& t = ep.types[i * nt + k];
            const auto& c = ep.choices[i * nt + k];
            mass += t.weight;
            after_tax += t.weight * (c.z - economy.tax.income.liability(c.z));
        }
        after_tax /= mass;
        CrossSectionRow row;
        row.percentile = static_cast<int>(std::floor(100.0 * mid)) + 1;
        row.mean_income = ep.cell_z[i];
        row.mean_after_tax_income = after_tax;
        row.dirty_share = ep.cell_x[i] / after_tax;
        row.mean_x_level = ep.cell_x[i];
        out.cross_section.rows.push_back(row);
        for (std::size_t k = 0; k < nt; ++k) {
            const AgentStats& s = ep.agents[i * nt + k];
            out.survey.rows.push_back({"a" + std::to_string(i * nt + k), s.choice.z, s.dx_dI, 1.0});
        }
    }
    out.cross_section.validate();
    out.survey.validate();
    return out;
}

namespace {

constexpr double kMedianIncome = 55000.0;
constexpr double kLogSpread = 0.9;

double income_at(double u) {
    static const boost::math::normal_distribution<double> unit;
    return kMedianIncome * std::exp(kLogSpread * boost::math::quantile(unit, u));
}

double rank_of(double z) {
    static const boost::math::normal_distribution<double> unit;
    return boost::math::cdf(unit, std::log(z / kMedianIncome) / kLogSpread);
}

// smooth progressive schedule with a transfer at the bottom
double income_tax(double z) { return -6000.0 + 0.15 * z + 0.25 * (z - 1e5 * std::log1p(z / 1e5)); }
double income_mtr(double z) { return 0.15 + 0.25 * z / (z + 1e5); }

// marginal propensity to spend on the dirty good, quadratic in income
double mpc_curve(double z) {
    double s = z / 1e5;
    return 0.074 - 0.015 * s + 0.0015 * s * s;
}

// taste elasticity with roots at 52,000 and 160,000
double taste_target(double z) {
    const double l1 = std::log(52000.0), l2 = std::log(160000.0);
    double l = std::log(z), u = (l - 0.5 * (l1 + l2)) / 0.7;
    return 0.4 * (l - l1) * (l - l2) / (1.0 + u * u);
}

// x-hat solves dx/dz = x eta / z + (1 - T') mpc, integrated in log income by RK4
std::vector<double> xhat_path(const std::vector<double>& z, double x0) {
    auto rhs = [](double l, double x) {
        double zz = std::exp(l);
        return x * taste_target(zz) + zz * (1.0 - income_mtr(zz)) * mpc_curve(zz);
    };
    std::vector<double> out{x0};
    double x = x0;
    for (std::size_t i = 1; i < z.size(); ++i) {
        double a = std::log(z[i - 1]), b = std::log(z[i]);
        const int steps = 64;
        double h = (b - a) / steps, l = a;
        for (int s = 0; s < steps; ++s, l += h) {
            double k1 = rhs(l, x);
            double k2 = rhs(l + 0.5 * h, x + 0.5 * h * k1);
            double k3 = rhs(l + 0.5 * h, x + 0.5 * h * k2);
            double k4 = rhs(l + h, x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.push_back(x);
    }
    return out;
}

// within-income variance of x_inc falls linearly in income rank from 0.013 to 0.004
double variance_target(double rank) { return 0.013 - 0.009 * std::clamp((rank - 0.05) / 0.9, 0.0, 1.0); }

}  // namespace

CalibrationData bundled_calibration(std::uint64_t seed, std::size_t respondents) {
    if (respondents < 100) throw Error(ErrorCode::InvalidArgument, "bundled_calibration: need at least 100 respondents");
    CalibrationData out;
    std::vector<double> z;
    for (int p = 1; p <= 100; ++p) z.push_back(income_at((p - 0.5) / 100.0));
    std::vector<double> x = xhat_path(z, 0.11 * (z.front() - income_tax(z.front())));
    for (int p = 1; p <= 100; ++p) {
        CrossSectionRow r;
        r.percentile = p;
        r.mean_income = z[p - 1];
        r.mean_after_tax_income = z[p - 1] - income_tax(z[p - 1]);
        r.dirty_share = x[p - 1] / r.mean_after_tax_income;
        r.mean_x_level = x[p - 1];
        out.cross_section.rows.push_back(r);
    }

    // Respondents on stratified income ranks. Each spends either nothing or a fixed share v at the
    // margin; error diffusion spreads the spenders so local means and variances track the targets,
    // and a seeded shuffle within blocks of 50 breaks the regular spacing.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    const double lo = 0.0025, hi = 0.9975;
    std::vector<double> zi(respondents);
    for (std::size_t i = 0; i < respondents; ++i)
        zi[i] = income_at(lo + (hi - lo) * (static_cast<double>(i) + jitter(rng)) / static_cast<double>(respondents));
    std::vector<double> mpc(respondents, 0.0);
    double carry = 0.5;
    for (std::size_t i = 0; i < respondents; ++i) {
        double m = mpc_curve(zi[i]);
        double net = 1.0 - income_mtr(zi[i]);
        double var = variance_target(rank_of(zi[i])) / (net * net);
        double v = (var + m * m) / m;
        double q = m / v;
        carry += q;
        if (carry >= 1.0) {
            carry -= 1.0;
            mpc[i] = v;
        }
    }
    for (std::size_t b = 0; b < respondents; b += 50) {
        std::size_t e = std::min(respondents, b + 50);
        std::vector<double> block(mpc.begin() + b, mpc.begin() + e);
        std::shuffle(block.begin(), block.end(), rng);
        std::copy(block.begin(), block.end(), mpc.begin() + b);
    }
    for (std::size_t i = 0; i < respondents; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "r%05zu", i + 1);
        out.survey.rows.push_back({id, zi[i], mpc[i], 1.0});
    }
    out.cross_section.validate();
    out.survey.validate();
    return out;
}

}  // namespace ctax
