#pragma once

#include <optional>
#include <vector>

#include "agent.hpp"
#include "schedules.hpp"

namespace ctax {

struct StatsProfile {
    IncomeGrid grid;
    std::vector<double> xhat, xhat_slope, x_inc, x_het, eta_taste, eps_z, eps_x, mtr;
    std::optional<std::vector<double>> var_x_inc;
    std::optional<std::vector<double>> gbar_plus;

    std::size_t size() const { return grid.size(); }
    const std::vector<double>& z() const { return grid.points(); }
    // recompute x_het and eta_taste from xhat, xhat_slope and x_inc
    void enforce_identities();
    // column lengths and sign invariants
    void validate() const;
};

struct Decomposition {
    std::vector<double> x_het, eta_taste;
};

Decomposition decompose(const std::vector<double>& z, const std::vector<double>& xhat,
                        const std::vector<double>& xhat_slope, const std::vector<double>& x_inc);

struct ExtractOptions {
    double rate_step = 1e-4;      // absolute step on marginal rates
    double income_step = 1e-4;    // relative step on z
    double transfer_step = 1e-4;  // relative step on disposable income for income effects
    double step_tolerance = 0.05; // one-sided estimates may differ by this relative amount
    std::optional<double> damage; // enables augmented welfare weights
};

// Finite-difference statistics of one agent around a solved choice.
double extract_eps_z(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double step,
                     double tolerance = 0.05);
double extract_eps_x(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double step,
                     double tolerance = 0.05);
double extract_x_inc(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                     double rel_step, double tolerance = 0.05);
double extract_cross_base(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                          double step, double tolerance = 0.05);
// compensated income response to a pure transfer of the given size (z units per dollar)
double extract_transfer_response(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                                 double transfer);

double extract_eps_z(const SyntheticEconomy& economy, const AgentType& type, double step = 1e-4);
double extract_eps_x(const SyntheticEconomy& economy, const AgentType& type, double step = 1e-4);
double extract_x_inc(const SyntheticEconomy& economy, const AgentType& type, double rel_step = 1e-4);
double extract_cross_base(const SyntheticEconomy& economy, const AgentType& type, double step = 1e-4);

struct AgentStats {
    AgentChoice choice;
    double mtr_z = 0.0, mtr_x = 0.0;
    double eps_z = 0.0, eps_x = 0.0, x_inc = 0.0, cross_base = 0.0;
    double dz_dI = 0.0, dx_dI = 0.0;  // income effects; dx_dI holds z fixed
    double g = 0.0;                   // augmented welfare weight (when damage is set)
};

// u_c / lambda plus the fiscal and externality value of the income effects
double augmented_weight(const AgentStats& s, double lambda, double damage);

AgentStats extract_agent(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                         const ExtractOptions& opt = {});

// Profile of a solved economy together with the per-agent statistics behind it.
struct EconomyProfile {
    StatsProfile profile;
    std::vector<AgentType> types;
    std::vector<AgentChoice> choices;
    std::vector<AgentStats> agents;
    std::vector<double> cell_z, cell_x;  // theta-weighted cell means, one per w
    CubicSpline xhat_curve;              // x-hat(z) through the cell means
    double lambda = 1.0;                 // mean marginal utility of consumption
};

EconomyProfile build_profile_from_economy(const SyntheticEconomy& economy, const ExtractOptions& opt = {});
EconomyProfile build_profile_from_choices(const SyntheticEconomy& economy, std::vector<AgentChoice> choices,
                                          const ExtractOptions& opt = {});

// (f(h) - f(h/2)) / (f(h/2) - f(h/4)); about 4 for a second-order scheme
double richardson_ratio(double f_h, double f_h2, double f_h4);

}  // namespace ctax
