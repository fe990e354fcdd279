#pragma once

#include <vector>

#include "schedules.hpp"

namespace ctax {

enum class UtilityFamily { SeparableHomogeneous, TasteShifted };

// u(c, x, z | w, theta) = G_a(c, x) - w (z/w)^(1+1/e) / (1+1/e), where G_a is a
// degree-one homogeneous CES aggregate of c and x with share a = alpha / (1 + alpha)
// and substitution elasticity 1/sigma_x (Cobb-Douglas at sigma_x = 1).
struct UtilityParams {
    UtilityFamily family = UtilityFamily::SeparableHomogeneous;
    double labor_elasticity = 0.33;
    double alpha0 = 0.1;
    double gamma = 0.0;     // TasteShifted: log alpha = log alpha0 + gamma r + gamma2 r^2 + theta, r = log(w / w_ref)
    double gamma2 = 0.0;
    double w_ref = 1.0;
    double sigma_x = 1.0;

    double taste(double w, double theta) const;
    void validate() const;
};

struct AgentType {
    double w = 0.0;
    double theta = 0.0;
    double weight = 0.0;
    std::size_t w_index = 0;
    std::size_t theta_index = 0;
};

struct SyntheticEconomy {
    std::vector<double> w_values, w_weights;
    std::vector<double> theta_values, theta_weights;  // empty: single theta = 0
    UtilityParams utility;
    TaxSystem tax;

    std::size_t theta_count() const { return theta_values.empty() ? 1 : theta_values.size(); }
    // w-major ordering: index = w_index * theta_count() + theta_index
    std::vector<AgentType> types() const;
    void validate() const;
};

// Reform shape entering schedules as T(.) + kappa * tau(.)
class ReformShape {
public:
    virtual ~ReformShape() = default;
    virtual double tau_z(double z) const = 0;
    virtual double tau_z_slope(double z) const = 0;
    virtual double tau_x(double x) const = 0;
    virtual double tau_x_slope(double x) const = 0;
    virtual double tau_x_curvature(double x) const = 0;
};

// Local modifications used by extractors and the oracle.
struct TaxPerturbation {
    double lump_sum = 0.0;  // added to disposable income
    double z_slope = 0.0, z_anchor = 0.0;
    double x_slope = 0.0, x_anchor = 0.0;
    const ReformShape* reform = nullptr;
    double kappa = 0.0;
};

struct InnerChoice {
    double x = 0.0;
    double c = 0.0;
    double foc_residual = 0.0;
};

struct AgentChoice {
    double z = 0.0;
    double x = 0.0;
    double c = 0.0;
    double inner_foc_residual = 0.0;
    double outer_foc_residual = 0.0;
    double utility = 0.0;
    double u_c = 0.0;
    double soc = 0.0;  // second derivative of the value function in z
};

class Agent {
public:
    Agent(const SyntheticEconomy& economy, const AgentType& type, TaxPerturbation pert = {});

    double alpha() const { return alpha_; }
    double disposable(double z) const;
    double income_tax(double z) const;
    double income_mtr(double z) const;
    double commodity_tax(double x) const;
    double commodity_mtr(double x) const;

    InnerChoice solve_inner(double z) const;
    // global search with multimodality guard
    AgentChoice solve() const;
    // local solve from a nearby guess (perturbation runs)
    AgentChoice solve_near(double z_guess) const;
    // value function z -> max_x u
    double value(double z) const;

    double utility(double c, double x, double z) const;
    double u_c(double c, double x) const;
    double u_x(double c, double x) const;

private:
    double outer_foc(double z, InnerChoice* inner = nullptr) const;
    AgentChoice finish(double z) const;

    const SyntheticEconomy& econ_;
    AgentType type_;
    TaxPerturbation pert_;
    double alpha_, share_, subst_;
};

AgentChoice solve_agent(const SyntheticEconomy& economy, const AgentType& type, const TaxPerturbation& pert = {});
InnerChoice solve_inner(const SyntheticEconomy& economy, const AgentType& type, double z, const TaxPerturbation& pert = {});

// Solves every type and checks that z is strictly increasing in w for each theta.
std::vector<AgentChoice> solve_economy(const SyntheticEconomy& economy, const TaxPerturbation& pert = {});
// Solves every type near a previous solution.
std::vector<AgentChoice> resolve_economy(const SyntheticEconomy& economy, const std::vector<AgentChoice>& base,
                                         const TaxPerturbation& pert);

struct Aggregate {
    double revenue = 0.0;
    double xbar = 0.0;
    std::vector<double> utilities;
    std::vector<double> weights;
    std::vector<double> u_c;
};

Aggregate aggregate(const SyntheticEconomy& economy, const std::vector<AgentChoice>& choices,
                    const TaxPerturbation& pert = {});

}  // namespace ctax
