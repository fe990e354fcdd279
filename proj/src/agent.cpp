#include "agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace ctax {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool is_cobb_douglas(double sigma_x) { return std::fabs(sigma_x - 1.0) < 1e-12; }

}  // namespace

double UtilityParams::taste(double w, double theta) const {
    if (family == UtilityFamily::SeparableHomogeneous) return alpha0;
    const double r = std::log(w / w_ref);
    return alpha0 * std::exp(gamma * r + gamma2 * r * r + theta);
}

void UtilityParams::validate() const {
    if (!(labor_elasticity > 0.0)) throw Error(ErrorCode::InvalidArgument, "utility: labor_elasticity must be > 0");
    if (!(alpha0 >= 0.0)) throw Error(ErrorCode::InvalidArgument, "utility: alpha0 must be >= 0");
    if (!(sigma_x > 0.0)) throw Error(ErrorCode::InvalidArgument, "utility: sigma_x must be > 0");
    if (!(w_ref > 0.0)) throw Error(ErrorCode::InvalidArgument, "utility: w_ref must be > 0");
    if (!std::isfinite(gamma) || !std::isfinite(gamma2))
        throw Error(ErrorCode::InvalidArgument, "utility: gamma and gamma2 must be finite");
    if (alpha0 == 0.0) return;
    // probe monotonicity and own-concavity around the balanced bundle
    SyntheticEconomy probe;
    probe.utility = *this;
    probe.w_values = {1.0};
    probe.w_weights = {1.0};
    Agent ag(probe, {w_ref, 0.0, 1.0, 0, 0});
    const double a = ag.alpha() / (1.0 + ag.alpha());
    const double pts[] = {0.8, 1.0, 1.25};
    const double h = 1e-3;
    for (double pc : pts)
        for (double px : pts) {
            double c = (1 - a) * pc, x = a * px;
            double uc = ag.u_c(c, x), ux = ag.u_x(c, x);
            if (!(uc > 0.0 && ux > 0.0)) throw Error(ErrorCode::InvalidArgument, "utility: not increasing on probe grid");
            if (!(ag.u_c(c * (1 + h), x) < uc) || !(ag.u_x(c, x * (1 + h)) < ux))
                throw Error(ErrorCode::NonConcave, "utility: not strictly concave on probe grid");
        }
}

std::vector<AgentType> SyntheticEconomy::types() const {
    std::vector<AgentType> out;
    std::size_t nt = theta_count();
    for (std::size_t i = 0; i < w_values.size(); ++i)
        for (std::size_t k = 0; k < nt; ++k) {
            double th = theta_values.empty() ? 0.0 : theta_values[k];
            double pw = theta_values.empty() ? 1.0 : theta_weights[k];
            out.push_back({w_values[i], th, w_weights[i] * pw, i, k});
        }
    return out;
}

void SyntheticEconomy::validate() const {
    if (w_values.empty() || w_values.size() != w_weights.size())
        throw Error(ErrorCode::InvalidArgument, "economy: w grid and weights must be nonempty and equal length");
    double s = 0.0;
    for (std::size_t i = 0; i < w_values.size(); ++i) {
        if (!(w_values[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "economy: productivity must be > 0");
        if (i > 0 && !(w_values[i] > w_values[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "economy: w grid must be strictly increasing");
        if (!(w_weights[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "economy: negative weight");
        s += w_weights[i];
    }
    if (std::fabs(s - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "economy: w weights must sum to 1");
    if (theta_values.size() != theta_weights.size())
        throw Error(ErrorCode::InvalidArgument, "economy: theta grid and weights differ in length");
    if (!theta_values.empty()) {
        double st = 0.0;
        for (double v : theta_weights) {
            if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "economy: negative theta weight");
            st += v;
        }
        if (std::fabs(st - 1.0) > 1e-12) throw Error(ErrorCode::InvalidArgument, "economy: theta weights must sum to 1");
    }
    utility.validate();
}

Agent::Agent(const SyntheticEconomy& economy, const AgentType& type, TaxPerturbation pert)
    : econ_(economy), type_(type), pert_(pert) {
    alpha_ = econ_.utility.taste(type.w, type.theta);
    share_ = alpha_ / (1.0 + alpha_);
    subst_ = 1.0 / econ_.utility.sigma_x;
}

double Agent::income_tax(double z) const {
    double t = econ_.tax.income.liability(z) + pert_.z_slope * (z - pert_.z_anchor) - pert_.lump_sum;
    if (pert_.reform && pert_.kappa != 0.0) t += pert_.kappa * pert_.reform->tau_z(z);
    return t;
}

double Agent::income_mtr(double z) const {
    double m = econ_.tax.income.marginal_rate(z) + pert_.z_slope;
    if (pert_.reform && pert_.kappa != 0.0) m += pert_.kappa * pert_.reform->tau_z_slope(z);
    return m;
}

double Agent::disposable(double z) const { return z - income_tax(z); }

double Agent::commodity_tax(double x) const {
    double t = econ_.tax.commodity.liability(x) + pert_.x_slope * (x - pert_.x_anchor);
    if (pert_.reform && pert_.kappa != 0.0) t += pert_.kappa * pert_.reform->tau_x(x);
    return t;
}

double Agent::commodity_mtr(double x) const {
    double m = econ_.tax.commodity.marginal_rate(x) + pert_.x_slope;
    if (pert_.reform && pert_.kappa != 0.0) m += pert_.kappa * pert_.reform->tau_x_slope(x);
    return m;
}

double Agent::utility(double c, double x, double z) const {
    const double a = share_;
    double g;
    if (a == 0.0) {
        g = c;
    } else if (is_cobb_douglas(econ_.utility.sigma_x)) {
        double lg = (1 - a) * std::log(c) + a * std::log(x) - ((1 - a) * std::log(1 - a) + a * std::log(a));
        g = std::exp(lg);
    } else {
        double rho = (subst_ - 1.0) / subst_;
        double s = std::pow(1 - a, 1.0 / subst_) * std::pow(c, rho) + std::pow(a, 1.0 / subst_) * std::pow(x, rho);
        g = std::pow(s, 1.0 / rho);
    }
    const double e = econ_.utility.labor_elasticity;
    const double w = type_.w;
    double labor = w * std::pow(z / w, 1.0 + 1.0 / e) / (1.0 + 1.0 / e);
    return g - labor;
}

double Agent::u_c(double c, double x) const {
    const double a = share_;
    if (a == 0.0) return 1.0;
    if (is_cobb_douglas(econ_.utility.sigma_x)) {
        double lg = (1 - a) * std::log(c) + a * std::log(x) - ((1 - a) * std::log(1 - a) + a * std::log(a));
        return (1 - a) * std::exp(lg) / c;
    }
    double rho = (subst_ - 1.0) / subst_;
    double s = std::pow(1 - a, 1.0 / subst_) * std::pow(c, rho) + std::pow(a, 1.0 / subst_) * std::pow(x, rho);
    double g = std::pow(s, 1.0 / rho);
    return std::pow(1 - a, 1.0 / subst_) * std::pow(c, rho - 1.0) * std::pow(g, 1.0 - rho);
}

double Agent::u_x(double c, double x) const {
    const double a = share_;
    if (a == 0.0) return 0.0;
    if (is_cobb_douglas(econ_.utility.sigma_x)) {
        double lg = (1 - a) * std::log(c) + a * std::log(x) - ((1 - a) * std::log(1 - a) + a * std::log(a));
        return a * std::exp(lg) / x;
    }
    double rho = (subst_ - 1.0) / subst_;
    double s = std::pow(1 - a, 1.0 / subst_) * std::pow(c, rho) + std::pow(a, 1.0 / subst_) * std::pow(x, rho);
    double g = std::pow(s, 1.0 / rho);
    return std::pow(a, 1.0 / subst_) * std::pow(x, rho - 1.0) * std::pow(g, 1.0 - rho);
}

InnerChoice Agent::solve_inner(double z) const {
    const double income = disposable(z);
    if (!(income > 0.0)) throw Error(ErrorCode::NoInteriorSolution, "solve_inner: nonpositive disposable income");
    if (alpha_ == 0.0) return {0.0, income - commodity_tax(0.0), 0.0};

    const CommodityTax& ct = econ_.tax.commodity;
    double dom_lo = ct.lower(), dom_hi = ct.upper();
    auto spend = [&](double x) { return x + commodity_tax(x) - income; };
    // largest affordable x
    double x_lo = std::max(dom_lo, 1e-9 * income);
    if (x_lo >= dom_hi) throw Error(ErrorCode::NoInteriorSolution, "solve_inner: empty commodity domain");
    if (!(spend(x_lo) < 0.0)) throw Error(ErrorCode::NoInteriorSolution, "solve_inner: budget exhausted at minimal x");
    double hi = std::min(dom_hi, income);
    while (spend(hi) < 0.0 && hi < dom_hi) hi = std::min(dom_hi, 2.0 * hi);
    double x_top;
    if (spend(hi) < 0.0) {
        x_top = hi;  // schedule domain ends before the budget binds
    } else {
        double xm = find_root(spend, x_lo, hi, spend(x_lo), spend(hi));
        x_top = xm - 1e-9 * (xm - x_lo);
    }

    const double ratio = std::log(share_ / (1.0 - share_));
    const double sig = econ_.utility.sigma_x;  // inverse substitution elasticity
    auto foc = [&](double x) {
        double c = income - x - commodity_tax(x);
        double p = 1.0 + commodity_mtr(x);
        if (!(p > 0.0)) throw Error(ErrorCode::InvalidArgument, "solve_inner: 1 + T'_x <= 0");
        if (!(c > 0.0)) return -std::numeric_limits<double>::max();
        return sig * (ratio + std::log(c) - std::log(x)) - std::log(p);
    };
    double f_lo = foc(x_lo), f_hi = foc(x_top);
    if (!(f_lo > 0.0) || !(f_hi < 0.0))
        throw Error(ErrorCode::NoInteriorSolution, "solve_inner: first-order condition has no interior root");
    double x = find_root(foc, x_lo, x_top, f_lo, f_hi);
    double c = income - x - commodity_tax(x);
    double p = 1.0 + commodity_mtr(x);
    // second-order check on the log first-order condition
    double slope = sig * (-p / c - 1.0 / x) - (ct.curvature(x) + (pert_.reform ? pert_.kappa * pert_.reform->tau_x_curvature(x) : 0.0)) / p;
    if (!(slope < 0.0)) throw Error(ErrorCode::NonConcave, "solve_inner: second-order condition fails");
    double mrs = std::exp(sig * (ratio + std::log(c) - std::log(x)));
    return {x, c, std::fabs(mrs / p - 1.0)};
}

double Agent::value(double z) const {
    if (!(disposable(z) > 0.0)) return kNegInf;
    InnerChoice in = solve_inner(z);
    return utility(in.c, in.x, z);
}

double Agent::outer_foc(double z, InnerChoice* inner) const {
    InnerChoice in = solve_inner(z);
    if (inner) *inner = in;
    double x = alpha_ == 0.0 ? 1.0 : in.x;
    double uc = u_c(in.c, x);
    const double e = econ_.utility.labor_elasticity;
    return uc * (1.0 - income_mtr(z)) - std::pow(z / type_.w, 1.0 / e);
}

AgentChoice Agent::finish(double z) const {
    InnerChoice in;
    double f = outer_foc(z, &in);
    const double e = econ_.utility.labor_elasticity;
    double scale = std::pow(z / type_.w, 1.0 / e);
    AgentChoice ch;
    ch.z = z;
    ch.x = in.x;
    ch.c = in.c;
    ch.inner_foc_residual = in.foc_residual;
    ch.outer_foc_residual = std::fabs(f) / scale;
    ch.utility = utility(in.c, alpha_ == 0.0 ? 1.0 : in.x, z);
    ch.u_c = u_c(in.c, alpha_ == 0.0 ? 1.0 : in.x);
    double h = 1e-5 * z;
    ch.soc = (outer_foc(z + h) - outer_foc(z - h)) / (2 * h);
    if (!(ch.soc < 0.0)) throw Error(ErrorCode::NonConcave, "solve_agent: second-order condition fails at z=" + std::to_string(z));
    return ch;
}

AgentChoice Agent::solve() const {
    const IncomeTaxSchedule& it = econ_.tax.income;
    double lo = std::max(1e-3 * type_.w, it.lower());
    double hi = std::min(10.0 * type_.w, it.upper());
    if (!(hi > lo)) throw Error(ErrorCode::NoInteriorSolution, "solve_agent: empty income search range");
    const int n = 400;
    std::vector<double> zs(n), fs(n), vs(n);
    for (int i = 0; i < n; ++i) {
        zs[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        if (disposable(zs[i]) > 0.0) {
            InnerChoice in;
            fs[i] = outer_foc(zs[i], &in);
            vs[i] = utility(in.c, alpha_ == 0.0 ? 1.0 : in.x, zs[i]);
        } else {
            fs[i] = std::numeric_limits<double>::max();
            vs[i] = kNegInf;
        }
    }
    // local maxima: derivative changes sign from + to -
    std::vector<int> peaks;
    for (int i = 0; i + 1 < n; ++i)
        if (fs[i] > 0.0 && fs[i + 1] <= 0.0) peaks.push_back(i);
    if (peaks.empty())
        throw Error(ErrorCode::NoInteriorSolution, "solve_agent: value function has no interior maximum for w=" + std::to_string(type_.w));
    int best = peaks.front();
    if (peaks.size() > 1) {
        std::vector<std::pair<double, int>> cand;
        for (int k : peaks) {
            double zk = find_root([this](double t) { return outer_foc(t); }, zs[k], zs[k + 1], fs[k], fs[k + 1]);
            cand.push_back({value(zk), k});
        }
        std::sort(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.first > b.first; });
        if (cand[0].first - cand[1].first < 1e-6 * std::max(1.0, std::fabs(cand[0].first)))
            throw Error(ErrorCode::MultipleOptima, "solve_agent: two separated local maxima with near-equal value");
        best = cand[0].second;
    }
    double z = find_root([this](double t) { return outer_foc(t); }, zs[best], zs[best + 1], fs[best], fs[best + 1]);
    return finish(z);
}

AgentChoice Agent::solve_near(double z_guess) const {
    const IncomeTaxSchedule& it = econ_.tax.income;
    double r = 1e-3;
    for (int attempt = 0; attempt < 12; ++attempt, r *= 4.0) {
        double lo = std::max(it.lower(), z_guess * (1.0 - std::min(r, 0.9)));
        double hi = std::min(it.upper(), z_guess * (1.0 + r));
        if (!(disposable(lo) > 0.0)) continue;
        double flo = outer_foc(lo), fhi = outer_foc(hi);
        if (flo > 0.0 && fhi < 0.0) {
            double z = find_root([this](double t) { return outer_foc(t); }, lo, hi, flo, fhi);
            return finish(z);
        }
    }
    return solve();
}

AgentChoice solve_agent(const SyntheticEconomy& economy, const AgentType& type, const TaxPerturbation& pert) {
    return Agent(economy, type, pert).solve();
}

InnerChoice solve_inner(const SyntheticEconomy& economy, const AgentType& type, double z, const TaxPerturbation& pert) {
    return Agent(economy, type, pert).solve_inner(z);
}

namespace {

void check_monotone(const SyntheticEconomy& economy, const std::vector<AgentChoice>& out) {
    std::size_t nt = economy.theta_count();
    for (std::size_t k = 0; k < nt; ++k)
        for (std::size_t i = 1; i < economy.w_values.size(); ++i) {
            double z0 = out[(i - 1) * nt + k].z, z1 = out[i * nt + k].z;
            if (!(z1 > z0))
                throw Error(ErrorCode::NonMonotone, "economy: income is not strictly increasing in w at w=" +
                                                        std::to_string(economy.w_values[i]));
        }
}

}  // namespace

std::vector<AgentChoice> solve_economy(const SyntheticEconomy& economy, const TaxPerturbation& pert) {
    economy.validate();
    std::vector<AgentChoice> out;
    for (const AgentType& t : economy.types()) out.push_back(solve_agent(economy, t, pert));
    check_monotone(economy, out);
    return out;
}

std::vector<AgentChoice> resolve_economy(const SyntheticEconomy& economy, const std::vector<AgentChoice>& base,
                                         const TaxPerturbation& pert) {
    std::vector<AgentType> types = economy.types();
    if (base.size() != types.size()) throw Error(ErrorCode::InvalidArgument, "resolve_economy: base size mismatch");
    std::vector<AgentChoice> out;
    for (std::size_t i = 0; i < types.size(); ++i) out.push_back(Agent(economy, types[i], pert).solve_near(base[i].z));
    return out;
}

Aggregate aggregate(const SyntheticEconomy& economy, const std::vector<AgentChoice>& choices, const TaxPerturbation& pert) {
    std::vector<AgentType> types = economy.types();
    if (choices.size() != types.size()) throw Error(ErrorCode::InvalidArgument, "aggregate: one choice per type required");
    Aggregate a;
    for (std::size_t i = 0; i < types.size(); ++i) {
        Agent ag(economy, types[i], pert);
        const AgentChoice& ch = choices[i];
        double f = types[i].weight;
        a.revenue += f * (ag.income_tax(ch.z) + ag.commodity_tax(ch.x));
        a.xbar += f * ch.x;
        a.utilities.push_back(ch.utility);
        a.weights.push_back(f);
        a.u_c.push_back(ch.u_c);
    }
    return a;
}

}  // namespace ctax
