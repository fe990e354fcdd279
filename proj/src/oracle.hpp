#pragma once

#include <string>
#include <vector>

#include "solver.hpp"
#include "statistics.hpp"

namespace ctax {

// Distribution-neutral reform: a triangular bump of unit height in T'_x centered at
// `center`, with tau_z(z) = -tau_x(xhat(z)) along the cross-sectional curve.
class BumpReform : public ReformShape {
public:
    BumpReform(CubicSpline xhat, double center, double half_width);

    double tau_z(double z) const override;
    double tau_z_slope(double z) const override;
    double tau_x(double x) const override;
    double tau_x_slope(double x) const override;
    double tau_x_curvature(double x) const override;

    double center() const { return center_; }
    double half_width() const { return half_width_; }

private:
    CubicSpline xhat_;
    double center_, half_width_;
};

// Vertically neutral linear reform: tau_x(x) = x, tau_z(z) = -xbar(z).
class VerticallyNeutralReform : public ReformShape {
public:
    explicit VerticallyNeutralReform(CubicSpline xbar);

    double tau_z(double z) const override;
    double tau_z_slope(double z) const override;
    double tau_x(double x) const override { return x; }
    double tau_x_slope(double) const override { return 1.0; }
    double tau_x_curvature(double) const override { return 0.0; }

private:
    CubicSpline xbar_;
};

// Bump centered midway between cells k and k+1 of the profile, reaching `cells` cells to each side.
BumpReform bump_between(const EconomyProfile& ep, std::size_t k, double cells = 2.0);
VerticallyNeutralReform vertically_neutral(const EconomyProfile& ep);

// Sum of f tau'_x(x) x over agents; gradients are reported per unit of this scale.
double reform_scale(const EconomyProfile& ep, const ReformShape& reform);

// dL/dkappa by central differences, L = sum f v / lambda - damage xbar + revenue,
// re-solving every agent at kappa = +-step. Normalized by reform_scale.
double welfare_gradient(const SyntheticEconomy& economy, const EconomyProfile& ep, const ReformShape& reform,
                        double damage, double step = 1e-4);

struct GradientDecomposition {
    double income = 0.0;       // income-tax revenue from income responses
    double direct_x = 0.0;     // uninternalized wedge times the compensated commodity response
    double income_to_x = 0.0;  // wedge times x_inc times the income response
    double mechanical = 0.0;   // (1 - g) times the change in tax paid at the original choice
    double sum() const { return income + direct_x + income_to_x + mechanical; }
};

// Same object built from extracted statistics, normalized by reform_scale.
GradientDecomposition welfare_gradient_decomposed(const SyntheticEconomy& economy, const EconomyProfile& ep,
                                                  const ReformShape& reform, double damage);

struct CovarianceIdentity {
    double cov_inc_het = 0.0;  // C[x_inc, x_het]
    double neg_var_inc = 0.0;  // -V[x_inc]
};

// x_het = slope - x_inc within one income cell.
CovarianceIdentity covariance_identity(const std::vector<double>& weights, const std::vector<double>& x_inc,
                                       double slope);

struct CovarianceCell {
    double z = 0.0;
    CovarianceIdentity identity;
    double rel_error = 0.0;
    // income-tax revenue effect of a vertically neutral reform: mean term, covariance correction, direct
    double mean_term = 0.0, cov_term = 0.0, direct = 0.0;
};

struct CovarianceReport {
    std::vector<CovarianceCell> cells;
    double max_rel_error = 0.0;
    bool holds = true;
};

CovarianceReport check_covariance_identities(const SyntheticEconomy& economy, const EconomyProfile& ep,
                                             double tolerance = 1e-12);

struct ProbeRow {
    double z0 = 0.0, kappa = 0.0;
    double net_gain = 0.0;            // revenue net of damage, per unit reform_scale
    double min_utility_change = 0.0;  // money-metric
    double max_utility_change = 0.0;
    bool improving = false;
};

struct ProbeReport {
    std::vector<ProbeRow> rows;
    bool improving_found = false;
};

// A direction improves if it raises revenue net of damage by more than gain_tol while no agent
// loses more than utility_tol in money-metric terms.
ProbeReport pareto_probe(const SyntheticEconomy& economy, const EconomyProfile& ep, double damage,
                         const std::vector<std::size_t>& cells, const std::vector<double>& kappas,
                         double gain_tol = 1e-6, double utility_tol = 1e-8);

// Bump cells spread evenly over the interior of the profile.
std::vector<std::size_t> interior_cells(const EconomyProfile& ep, std::size_t count, double cells = 2.0);

// Commodity tax with marginal rates at the given consumption levels, padded flat beyond them.
CommodityTax rate_schedule(const std::vector<double>& x, const std::vector<double>& rate);

struct DriverOptions {
    int max_iter = 100;
    double tol = 1e-10;
    ExtractOptions extract;
    SolverOptions solver;
};

struct DriverResult {
    SyntheticEconomy economy;
    EconomyProfile profile;
    Solution solution;
    int iterations = 0;
    double change = 0.0;
};

// Iterates install-resolve-reprofile until the commodity schedule reproduces itself.
DriverResult solve_nonlinear_consistent(const SyntheticEconomy& economy, double damage, const DriverOptions& opt = {});
// Same for a linear rate (method Linear or Multidim).
DriverResult solve_linear_consistent(const SyntheticEconomy& economy, double damage, Method method = Method::Linear,
                                     const DriverOptions& opt = {});

struct SignChangeReport {
    std::vector<double> formula_z, formula_value;  // implied deviation rate - damage per cell
    std::vector<double> oracle_z, oracle_value;    // bump gradient per bump center
    std::vector<double> formula_crossings, oracle_crossings;
    bool match = false;
};

// Compares where the formula's implied deviation and the oracle gradient change sign.
SignChangeReport sign_change_check(const SyntheticEconomy& economy, const EconomyProfile& ep, double damage);

struct VerifyCheck {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string detail;
};

struct VerifyReport {
    double damage = 0.0;
    std::vector<VerifyCheck> checks;
    bool passed() const;
};

// Oracle checks on an economy at its installed taxes: Slutsky symmetry of the cross-base
// response, bump-gradient stationarity, decomposition consistency, the Pareto probe and the
// within-income covariance identities.
VerifyReport run_oracle_suite(const SyntheticEconomy& economy, double damage);

}  // namespace ctax
