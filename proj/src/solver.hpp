#pragma once

#include <functional>
#include <string>
#include <vector>

#include "statistics.hpp"

namespace ctax {

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    double value = 0.0;
    std::string branch_note;
};

struct FixedPointOptions {
    double damping = 0.5;
    double tol = 1e-12;
    int max_iter = 10000;
};

// Damped iteration x <- (1 - d) x + d map(x), converged when |map(x) - x| < tol.
SolveReport fixed_point(const std::function<double(double)>& map, double seed, const FixedPointOptions& opt = {});

struct SolverOptions {
    FixedPointOptions fixed_point;
    bool unit_denominator = false;  // ablation: force 1 - RR x_inc to 1
};

enum class Method { Nonlinear, Levels, Linear, Multidim, MultidimPointwise };
const char* method_name(Method m);
Method parse_method(const std::string& s);

struct Solution {
    Method method = Method::Nonlinear;
    double damage = 0.0;
    std::vector<double> z;
    std::vector<double> rate;         // commodity marginal rate per grid point (schedule methods)
    std::vector<double> income_rate;  // optimal income marginal rate (levels only)
    std::vector<double> closed_form;  // quadratic-root cross-check (schedule methods)
    std::vector<double> residual;     // per-point residual of the efficiency condition
    double scalar_rate = 0.0;         // linear methods
    double scalar_closed_form = 0.0;
    SolveReport report;

    bool is_scalar() const { return method == Method::Linear || method == Method::Multidim; }
};

// Root of (tau - d) = k u N / (1 - u M) with u = 1 + tau, continuous in N, M at 0.
double pareto_closed_form(double damage, double num, double den_coef, bool* ok = nullptr);

Solution solve_nonlinear(const StatsProfile& profile, double damage, const SolverOptions& opt = {});
Solution solve_optimal_levels(const StatsProfile& profile, double damage);
Solution solve_linear(const StatsProfile& profile, double damage, const SolverOptions& opt = {});
Solution solve_multidim(const StatsProfile& profile, double damage, const SolverOptions& opt = {});
// pointwise analog of the multidimensional condition, attenuated by the local variance
Solution solve_multidim_pointwise(const StatsProfile& profile, double damage, const SolverOptions& opt = {});
Solution solve(const StatsProfile& profile, double damage, Method method, const SolverOptions& opt = {});

// Residual of the pointwise efficiency condition
// (tau - d)/(1 + tau) - eta eps_z / eps_x (T'_z + (tau - d) x_inc)/(1 - T'_z).
double efficiency_residual(const StatsProfile& p, std::size_t i, double rate, double mtr, double damage);

// Aggregates entering the linear conditions, so that t - d = u N / (1 - u M + u V).
struct LinearTerms {
    double num = 0.0, den = 0.0, var = 0.0, base = 0.0;
};
LinearTerms linear_terms(const StatsProfile& profile);

}  // namespace ctax
