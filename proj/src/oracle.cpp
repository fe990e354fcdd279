#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "error.hpp"

namespace ctax {

namespace {

// spline value with linear continuation beyond its span
double extended(const CubicSpline& s, double z) {
    if (z < s.lower()) return s.value(s.lower()) + s.derivative(s.lower()) * (z - s.lower());
    if (z > s.upper()) return s.value(s.upper()) + s.derivative(s.upper()) * (z - s.upper());
    return s.value(z);
}

double extended_slope(const CubicSpline& s, double z) {
    return s.derivative(std::clamp(z, s.lower(), s.upper()));
}

std::vector<AgentChoice> resolve_checked(const SyntheticEconomy& economy, const std::vector<AgentChoice>& base,
                                         const TaxPerturbation& pert) {
    try {
        return resolve_economy(economy, base, pert);
    } catch (const Error& e) {
        throw Error(ErrorCode::SolverFailure, "oracle: agent re-solve failed at kappa=" + std::to_string(pert.kappa) +
                                                  ": " + e.what());
    }
}

// per-agent contribution to revenue net of damage under a perturbation
std::vector<double> net_revenue(const SyntheticEconomy& economy, const std::vector<AgentType>& types,
                                const std::vector<AgentChoice>& ch, const TaxPerturbation& pert, double damage) {
    std::vector<double> out(types.size());
    for (std::size_t i = 0; i < types.size(); ++i) {
        Agent ag(economy, types[i], pert);
        out[i] = ag.income_tax(ch[i].z) + ag.commodity_tax(ch[i].x) - damage * ch[i].x;
    }
    return out;
}

}  // namespace

BumpReform::BumpReform(CubicSpline xhat, double center, double half_width)
    : xhat_(std::move(xhat)), center_(center), half_width_(half_width) {
    if (!(half_width > 0.0) || !std::isfinite(center))
        throw Error(ErrorCode::InvalidArgument, "BumpReform: half width must be > 0");
}

double BumpReform::tau_x_slope(double x) const {
    return std::max(0.0, 1.0 - std::fabs(x - center_) / half_width_);
}

double BumpReform::tau_x(double x) const {
    const double lo = center_ - half_width_, hi = center_ + half_width_;
    if (x <= lo) return 0.0;
    if (x <= center_) return (x - lo) * (x - lo) / (2.0 * half_width_);
    if (x < hi) return half_width_ - (hi - x) * (hi - x) / (2.0 * half_width_);
    return half_width_;
}

double BumpReform::tau_x_curvature(double x) const {
    if (x <= center_ - half_width_ || x >= center_ + half_width_) return 0.0;
    return x < center_ ? 1.0 / half_width_ : -1.0 / half_width_;
}

double BumpReform::tau_z(double z) const { return -tau_x(extended(xhat_, z)); }

double BumpReform::tau_z_slope(double z) const {
    return -tau_x_slope(extended(xhat_, z)) * extended_slope(xhat_, z);
}

VerticallyNeutralReform::VerticallyNeutralReform(CubicSpline xbar) : xbar_(std::move(xbar)) {}

double VerticallyNeutralReform::tau_z(double z) const { return -extended(xbar_, z); }

double VerticallyNeutralReform::tau_z_slope(double z) const { return -extended_slope(xbar_, z); }

BumpReform bump_between(const EconomyProfile& ep, std::size_t k, double cells) {
    const auto& x = ep.cell_x;
    if (k + 1 >= x.size()) throw Error(ErrorCode::OutOfRange, "bump_between: cell index past the grid");
    double z0 = 0.5 * (ep.cell_z[k] + ep.cell_z[k + 1]);
    double center = ep.xhat_curve.value(z0);
    double half = cells * (x[k + 1] - x[k]);
    if (!(half > 0.0)) throw Error(ErrorCode::NonMonotone, "bump_between: xhat is not increasing at the bump");
    return BumpReform(ep.xhat_curve, center, half);
}

VerticallyNeutralReform vertically_neutral(const EconomyProfile& ep) { return VerticallyNeutralReform(ep.xhat_curve); }

double reform_scale(const EconomyProfile& ep, const ReformShape& reform) {
    double s = 0.0;
    for (std::size_t i = 0; i < ep.types.size(); ++i)
        s += ep.types[i].weight * reform.tau_x_slope(ep.choices[i].x) * ep.choices[i].x;
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "oracle: reform does not touch any agent");
    return s;
}

double welfare_gradient(const SyntheticEconomy& economy, const EconomyProfile& ep, const ReformShape& reform,
                        double damage, double step) {
    TaxPerturbation plus, minus;
    plus.reform = minus.reform = &reform;
    plus.kappa = step;
    minus.kappa = -step;
    std::vector<AgentChoice> cp = resolve_checked(economy, ep.choices, plus);
    std::vector<AgentChoice> cm = resolve_checked(economy, ep.choices, minus);
    std::vector<double> rp = net_revenue(economy, ep.types, cp, plus, damage);
    std::vector<double> rm = net_revenue(economy, ep.types, cm, minus, damage);
    // sum of per-agent differences keeps the cancellation local
    double dl = 0.0;
    for (std::size_t i = 0; i < ep.types.size(); ++i)
        dl += ep.types[i].weight * ((cp[i].utility - cm[i].utility) / ep.lambda + (rp[i] - rm[i]));
    return dl / (2.0 * step) / reform_scale(ep, reform);
}

GradientDecomposition welfare_gradient_decomposed(const SyntheticEconomy& economy, const EconomyProfile& ep,
                                                  const ReformShape& reform, double damage) {
    (void)economy;
    GradientDecomposition g;
    for (std::size_t i = 0; i < ep.types.size(); ++i) {
        const AgentStats& s = ep.agents[i];
        const double f = ep.types[i].weight;
        const double z = s.choice.z, x = s.choice.x;
        const double wedge = s.mtr_x - damage;
        const double slope_x = reform.tau_x_slope(x);
        // compensated income response to the change in the effective marginal rate on income
        const double dz = -z * s.eps_z * (reform.tau_z_slope(z) + slope_x * s.x_inc) / (1.0 - s.mtr_z);
        const double dx_direct = -s.eps_x * x * slope_x / (1.0 + s.mtr_x);
        const double weight = augmented_weight(s, ep.lambda, damage);
        g.income += f * s.mtr_z * dz;
        g.income_to_x += f * wedge * s.x_inc * dz;
        g.direct_x += f * wedge * dx_direct;
        g.mechanical += f * (1.0 - weight) * (reform.tau_z(z) + reform.tau_x(x));
    }
    const double scale = reform_scale(ep, reform);
    g.income /= scale;
    g.income_to_x /= scale;
    g.direct_x /= scale;
    g.mechanical /= scale;
    return g;
}

CovarianceIdentity covariance_identity(const std::vector<double>& weights, const std::vector<double>& x_inc,
                                       double slope) {
    const std::size_t n = weights.size();
    if (x_inc.size() != n) throw Error(ErrorCode::GridMismatch, "covariance_identity: size mismatch");
    double m = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(m > 0.0)) throw Error(ErrorCode::InvalidArgument, "covariance_identity: weights must have positive mass");
    CovarianceIdentity r;
    if (n == 1) return r;
    std::vector<double> het(n);
    double mi = 0.0, mh = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        het[k] = slope - x_inc[k];
        mi += weights[k] * x_inc[k];
        mh += weights[k] * het[k];
    }
    mi /= m;
    mh /= m;
    double cov = 0.0, var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cov += weights[k] * (x_inc[k] - mi) * (het[k] - mh);
        var += weights[k] * (x_inc[k] - mi) * (x_inc[k] - mi);
    }
    r.cov_inc_het = cov / m;
    r.neg_var_inc = -var / m;
    return r;
}

CovarianceReport check_covariance_identities(const SyntheticEconomy& economy, const EconomyProfile& ep,
                                             double tolerance) {
    const std::size_t nw = economy.w_values.size(), nt = economy.theta_count();
    const StatsProfile& p = ep.profile;
    CovarianceReport rep;
    for (std::size_t i = 0; i < nw; ++i) {
        std::vector<double> w(nt), inc(nt), ez(nt), het(nt);
        CovarianceCell cell;
        cell.z = p.z()[i];
        double m = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            const AgentStats& s = ep.agents[i * nt + k];
            w[k] = ep.types[i * nt + k].weight;
            inc[k] = s.x_inc;
            ez[k] = s.eps_z;
            het[k] = p.xhat_slope[i] - s.x_inc;
            m += w[k];
            cell.direct += w[k] * s.mtr_z * s.eps_z * s.choice.z * het[k] / (1.0 - s.mtr_z);
        }
        cell.direct /= m;
        cell.identity = covariance_identity(w, inc, p.xhat_slope[i]);
        double scale = std::fabs(cell.identity.neg_var_inc);
        double diff = std::fabs(cell.identity.cov_inc_het - cell.identity.neg_var_inc);
        cell.rel_error = scale > 0.0 ? diff / scale : diff;
        // mean-statistics term and covariance correction at the cell's income
        double me = 0.0, mh = 0.0, c = 0.0;
        for (std::size_t k = 0; k < nt; ++k) {
            me += w[k] * ez[k] / m;
            mh += w[k] * het[k] / m;
        }
        for (std::size_t k = 0; k < nt; ++k) c += w[k] * (ez[k] - me) * (het[k] - mh) / m;
        const double t = p.mtr[i], z = p.z()[i];
        cell.mean_term = t * me * z * mh / (1.0 - t);
        cell.cov_term = t * z / (1.0 - t) * c;
        rep.max_rel_error = std::max(rep.max_rel_error, cell.rel_error);
        if (cell.rel_error > tolerance) rep.holds = false;
        rep.cells.push_back(cell);
    }
    return rep;
}

std::vector<std::size_t> interior_cells(const EconomyProfile& ep, std::size_t count, double cells) {
    const std::size_t n = ep.cell_z.size();
    const std::size_t margin = static_cast<std::size_t>(std::ceil(cells)) + 1;
    if (n < 2 * margin + 2 || count == 0) throw Error(ErrorCode::InvalidArgument, "interior_cells: grid too small");
    const std::size_t lo = margin, hi = n - 2 - margin;
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < count; ++j) {
        double t = count == 1 ? 0.5 : static_cast<double>(j) / (count - 1);
        std::size_t k = lo + static_cast<std::size_t>(std::lround(t * (hi - lo)));
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

ProbeReport pareto_probe(const SyntheticEconomy& economy, const EconomyProfile& ep, double damage,
                         const std::vector<std::size_t>& cells, const std::vector<double>& kappas, double gain_tol,
                         double utility_tol) {
    ProbeReport rep;
    std::vector<double> base = net_revenue(economy, ep.types, ep.choices, TaxPerturbation{}, damage);
    for (std::size_t k : cells) {
        BumpReform bump = bump_between(ep, k);
        const double scale = reform_scale(ep, bump);
        for (double kappa : kappas) {
            ProbeRow row;
            row.z0 = 0.5 * (ep.cell_z[k] + ep.cell_z[k + 1]);
            row.kappa = kappa;
            if (kappa != 0.0) {
                TaxPerturbation pert;
                pert.reform = &bump;
                pert.kappa = kappa;
                std::vector<AgentChoice> ch = resolve_checked(economy, ep.choices, pert);
                std::vector<double> rev = net_revenue(economy, ep.types, ch, pert, damage);
                double gain = 0.0;
                row.min_utility_change = row.max_utility_change = (ch[0].utility - ep.choices[0].utility) / ep.choices[0].u_c;
                for (std::size_t i = 0; i < ch.size(); ++i) {
                    gain += ep.types[i].weight * (rev[i] - base[i]);
                    double dv = (ch[i].utility - ep.choices[i].utility) / ep.choices[i].u_c;
                    row.min_utility_change = std::min(row.min_utility_change, dv);
                    row.max_utility_change = std::max(row.max_utility_change, dv);
                }
                row.net_gain = gain / scale;
            }
            row.improving = row.net_gain > gain_tol && row.min_utility_change >= -utility_tol;
            rep.improving_found = rep.improving_found || row.improving;
            rep.rows.push_back(row);
        }
    }
    return rep;
}

CommodityTax rate_schedule(const std::vector<double>& x, const std::vector<double>& rate) {
    if (x.size() != rate.size() || x.empty()) throw Error(ErrorCode::GridMismatch, "rate_schedule: size mismatch");
    std::vector<std::pair<double, double>> knots;
    knots.push_back({0.0, rate.front()});
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > knots.back().first)) throw Error(ErrorCode::NonMonotone, "rate_schedule: x must be increasing");
        knots.push_back({x[i], rate[i]});
    }
    // flat continuation far beyond any income an agent can reach
    for (double f = 2.0; f <= 16384.0; f *= 2.0) knots.push_back({f * x.back(), rate.back()});
    return CommodityTax::from_rates(std::move(knots));
}

DriverResult solve_nonlinear_consistent(const SyntheticEconomy& economy, double damage, const DriverOptions& opt) {
    DriverResult r;
    r.economy = economy;
    ExtractOptions ex = opt.extract;
    ex.damage = damage;
    // Anderson mixing on the installed rates; the plain iteration contracts slowly
    const int depth = 5;
    std::vector<Eigen::VectorXd> hist_in, hist_res;
    for (int it = 1; it <= opt.max_iter; ++it) {
        r.profile = build_profile_from_economy(r.economy, ex);
        r.solution = solve_nonlinear(r.profile.profile, damage, opt.solver);
        r.iterations = it;
        const std::size_t n = r.profile.cell_x.size();
        Eigen::VectorXd in(n), out(n);
        for (std::size_t i = 0; i < n; ++i) {
            in[i] = r.economy.tax.commodity.marginal_rate(r.profile.cell_x[i]);
            out[i] = r.solution.rate[i];
        }
        Eigen::VectorXd res = out - in;
        r.change = res.cwiseAbs().maxCoeff();
        if (r.change < opt.tol) return r;
        hist_in.push_back(in);
        hist_res.push_back(res);
        if (static_cast<int>(hist_in.size()) > depth + 1) {
            hist_in.erase(hist_in.begin());
            hist_res.erase(hist_res.begin());
        }
        Eigen::VectorXd next = out;
        const std::size_t m = hist_in.size() - 1;
        if (m > 0) {
            Eigen::MatrixXd dr(n, m), dx(n, m);
            for (std::size_t j = 0; j < m; ++j) {
                dr.col(j) = hist_res[j + 1] - hist_res[j];
                dx.col(j) = hist_in[j + 1] - hist_in[j];
            }
            Eigen::VectorXd gamma = dr.colPivHouseholderQr().solve(res);
            next = out - (dx + dr) * gamma;
        }
        std::vector<double> rates(next.data(), next.data() + n);
        r.economy.tax.commodity = rate_schedule(r.profile.cell_x, rates);
    }
    throw Error(ErrorCode::NoConvergence, "solve_nonlinear_consistent: schedule did not settle, change " +
                                              std::to_string(r.change));
}

DriverResult solve_linear_consistent(const SyntheticEconomy& economy, double damage, Method method,
                                     const DriverOptions& opt) {
    if (method != Method::Linear && method != Method::Multidim)
        throw Error(ErrorCode::InvalidArgument, "solve_linear_consistent: method must be linear or multidim");
    DriverResult r;
    r.economy = economy;
    ExtractOptions ex = opt.extract;
    ex.damage = damage;
    for (int it = 1; it <= opt.max_iter; ++it) {
        r.profile = build_profile_from_economy(r.economy, ex);
        r.solution = solve(r.profile.profile, damage, method, opt.solver);
        r.iterations = it;
        const double current = r.economy.tax.commodity.marginal_rate(r.profile.cell_x.front());
        r.change = std::fabs(r.solution.scalar_rate - current);
        if (r.economy.tax.commodity.is_linear() && r.change < opt.tol) return r;
        r.economy.tax.commodity = CommodityTax::linear(r.solution.scalar_rate);
    }
    throw Error(ErrorCode::NoConvergence, "solve_linear_consistent: rate did not settle, change " +
                                              std::to_string(r.change));
}

namespace {

std::vector<double> crossings(const std::vector<double>& z, const std::vector<double>& v) {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < z.size(); ++i)
        if ((v[i] > 0.0) != (v[i + 1] > 0.0)) out.push_back(z[i] + (z[i + 1] - z[i]) * v[i] / (v[i] - v[i + 1]));
    return out;
}

}  // namespace

SignChangeReport sign_change_check(const SyntheticEconomy& economy, const EconomyProfile& ep, double damage) {
    SignChangeReport rep;
    Solution s = solve_nonlinear(ep.profile, damage);
    rep.formula_z = ep.profile.z();
    for (double r : s.rate) rep.formula_value.push_back(r - damage);
    const std::size_t n = ep.cell_z.size();
    for (std::size_t k = 3; k + 4 < n; ++k) {
        BumpReform b = bump_between(ep, k);
        rep.oracle_z.push_back(0.5 * (ep.cell_z[k] + ep.cell_z[k + 1]));
        rep.oracle_value.push_back(welfare_gradient(economy, ep, b, damage));
    }
    // compare only over the span the bumps cover
    std::vector<double> fz, fv;
    for (std::size_t i = 0; i < n; ++i)
        if (rep.formula_z[i] >= rep.oracle_z.front() && rep.formula_z[i] <= rep.oracle_z.back()) {
            fz.push_back(rep.formula_z[i]);
            fv.push_back(rep.formula_value[i]);
        }
    rep.formula_crossings = crossings(fz, fv);
    rep.oracle_crossings = crossings(rep.oracle_z, rep.oracle_value);
    rep.match = rep.formula_crossings.size() == rep.oracle_crossings.size();
    for (std::size_t j = 0; rep.match && j < rep.formula_crossings.size(); ++j) {
        double zc = rep.formula_crossings[j];
        auto it = std::upper_bound(ep.cell_z.begin(), ep.cell_z.end(), zc);
        std::size_t i = std::clamp<std::size_t>(it - ep.cell_z.begin(), 1, n - 1);
        double cell = ep.cell_z[i] - ep.cell_z[i - 1];
        if (std::fabs(zc - rep.oracle_crossings[j]) > cell) rep.match = false;
    }
    return rep;
}

bool VerifyReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

VerifyReport run_oracle_suite(const SyntheticEconomy& economy, double damage) {
    VerifyReport rep;
    rep.damage = damage;
    ExtractOptions ex;
    ex.damage = damage;
    EconomyProfile ep = build_profile_from_economy(economy, ex);

    // Slutsky symmetry: cross-base response against -(z eps_z / (1 - T'_z)) x_inc
    std::size_t matched = 0;
    for (const AgentStats& a : ep.agents) {
        double rhs = -(a.choice.z * a.eps_z / (1.0 - a.mtr_z)) * a.x_inc;
        double scale = std::max(std::fabs(rhs), std::fabs(a.cross_base));
        if (scale == 0.0 || std::fabs(a.cross_base - rhs) <= 0.01 * scale) ++matched;
    }
    double share = static_cast<double>(matched) / static_cast<double>(ep.agents.size());
    rep.checks.push_back({"slutsky_symmetry", share, 0.95, share >= 0.95, "share of agents within 1% relative"});

    double worst = 0.0, worst_gap = 0.0;
    for (std::size_t k : interior_cells(ep, 5)) {
        BumpReform bump = bump_between(ep, k);
        double direct = welfare_gradient(economy, ep, bump, damage);
        worst = std::max(worst, std::fabs(direct));
        if (std::fabs(direct) > 1e-6) {
            double sum = welfare_gradient_decomposed(economy, ep, bump, damage).sum();
            worst_gap = std::max(worst_gap, std::fabs(sum - direct) / std::fabs(direct));
        }
    }
    rep.checks.push_back({"bump_stationarity", worst, 1e-5, worst < 1e-5, "largest |gradient| over 5 interior bumps"});
    rep.checks.push_back({"gradient_decomposition", worst_gap, 0.02, worst_gap <= 0.02,
                          "component sum vs direct gradient, relative, where |direct| > 1e-6"});

    ProbeReport probe = pareto_probe(economy, ep, damage, interior_cells(ep, 10), {-1e-2, -1e-3, 1e-3, 1e-2});
    double best_gain = 0.0;
    for (const ProbeRow& row : probe.rows)
        if (row.improving) best_gain = std::max(best_gain, row.net_gain);
    rep.checks.push_back({"no_improving_direction", best_gain, 1e-6, !probe.improving_found,
                          "largest net gain among directions that leave every agent no worse off"});

    CovarianceReport cov = check_covariance_identities(economy, ep);
    rep.checks.push_back({"covariance_identity", cov.max_rel_error, 1e-12, cov.holds,
                          "within-income C[x_inc, x_het] = -V[x_inc], relative"});
    return rep;
}

}  // namespace ctax
