#pragma once

#include <optional>
#include <string>
#include <vector>

#include "statistics.hpp"

namespace ctax {

struct CrossSectionRow {
    int percentile = 0;
    double mean_income = 0.0;
    double mean_after_tax_income = 0.0;
    double dirty_share = 0.0;
    std::optional<double> mean_x_level;
};

struct BinnedCrossSection {
    std::vector<CrossSectionRow> rows;
    // percentiles unique in 1..100, incomes positive and strictly increasing, shares in (0, 1)
    void validate() const;
};

struct SurveyRow {
    std::string id;
    double taxable_income = 0.0;
    double mpc_dirty_share = 0.0;
    double total_mpc = 0.0;
};

struct SurveyMpcTable {
    std::vector<SurveyRow> rows;
    void validate() const;
};

struct SmoothingConfig {
    std::size_t grid_size = 1000;
    bool log_spaced = true;
    std::optional<double> spline_penalty;  // fixed penalty; generalized cross-validation when absent
    int poly_degree_mpc = 2;
    double grid_floor = 600.0;
    double grid_cap = 325000.0;
    double mtr_lower = -0.2;
    double mtr_upper = 0.99;
    double variance_bandwidth = 0.1;  // log-income width of the decile-variance smoother
    void validate() const;
};

// Values on an income grid.
struct GridCurve {
    std::vector<double> z, value;
};

struct PointSeries {
    std::vector<double> z, value;
};

// x-hat at each percentile: dirty share times after-tax income.
PointSeries savings_adjust(const BinnedCrossSection& cs);

struct PolynomialFit {
    std::vector<double> coef;        // ascending powers of raw income
    std::vector<double> std_error;
    std::vector<double> covariance;  // row-major, (degree+1)^2
    std::vector<double> fitted;
    double residual_sd = 0.0;

    int degree() const { return static_cast<int>(coef.size()) - 1; }
    double value(double z) const;
    std::vector<double> evaluate(const std::vector<double>& z) const;
};

// Least squares of mpc_dirty_share on taxable income.
PolynomialFit fit_mpc_curve(const SurveyMpcTable& table, const SmoothingConfig& cfg);
PolynomialFit fit_mpc_curve(const SurveyMpcTable& table, int degree);

// x_inc = (1 - T'_z) dx/dI on a shared grid.
GridCurve rescale_mpc(const GridCurve& dx_dI, const GridCurve& mtr);

struct MtrRecovery {
    GridCurve mtr;                      // clamped to the configured band
    std::vector<double> raw;            // before clamping
    std::vector<std::string> warnings;  // one entry per clamped grid point
    double penalty = 0.0;
};

MtrRecovery recover_mtr(const BinnedCrossSection& cs, const std::vector<double>& grid, const SmoothingConfig& cfg);

struct SmoothedProfiles {
    GridCurve xhat, xhat_slope, x_inc;
    double penalty = 0.0;
};

// Smooths log x-hat against log income and differentiates analytically. x_inc already on the grid
// passes through; scattered x_inc points are smoothed against log income.
SmoothedProfiles smooth_profiles(const PointSeries& xhat, const PointSeries& x_inc, const std::vector<double>& grid,
                                 const SmoothingConfig& cfg);

struct DecileVariance {
    std::vector<double> lower, upper;  // income span of each decile
    std::vector<std::size_t> count;
    std::vector<double> variance;      // step values before smoothing
    GridCurve step, smoothed;
};

DecileVariance variance_by_decile(const SurveyMpcTable& table, const GridCurve& mtr, const SmoothingConfig& cfg);

// Equally log-spaced grid over the shared data span, clipped to [grid_floor, grid_cap].
std::vector<double> pipeline_grid(const BinnedCrossSection& cs, const SurveyMpcTable& table,
                                  const SmoothingConfig& cfg);

// Income density from the percentile midpoints, normalized over the grid.
IncomeGrid percentile_density(const BinnedCrossSection& cs, const std::vector<double>& grid);

struct PipelineOutputs {
    IncomeGrid grid;
    GridCurve xhat, xhat_slope, x_inc, mtr;
    std::optional<GridCurve> var_x_inc;
};

StatsProfile assemble_profile(const PipelineOutputs& out, double eps_z, double eps_x);

struct PipelineResult {
    StatsProfile profile;
    PolynomialFit mpc;
    MtrRecovery mtr;
    DecileVariance variance;
    SmoothedProfiles smoothed;
    std::vector<std::string> warnings;
};

PipelineResult run_pipeline(const BinnedCrossSection& cs, const SurveyMpcTable& table, double eps_z, double eps_x,
                            const SmoothingConfig& cfg = {});

// Named pair of constant elasticities (taxable income, dirty good given income).
struct Scenario {
    std::string name;
    double eps_z = 0.0;
    double eps_x = 0.0;
};

const std::vector<Scenario>& scenario_table();
// A table name, or "custom:EPS_Z,EPS_X" with both constants positive.
Scenario find_scenario(const std::string& name);
// Copy of the profile with constant elasticity columns replaced.
StatsProfile with_elasticities(const StatsProfile& profile, double eps_z, double eps_x);

}  // namespace ctax
