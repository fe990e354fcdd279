#include "statistics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "error.hpp"

namespace ctax {

namespace {

// one-sided estimates in comparable units; tiny responses are not compared
void check_steps(double plus, double minus, double tolerance, const char* what) {
    double scale = std::max(std::fabs(plus), std::fabs(minus));
    if (scale < 1e-7) return;
    if (std::fabs(plus - minus) > tolerance * scale)
        throw Error(ErrorCode::StepTooLarge, std::string(what) + ": one-sided estimates differ by more than tolerance");
}

double weighted_mean(const std::vector<double>& v, const std::vector<double>& w) {
    double s = 0.0, m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += w[i] * v[i];
        m += w[i];
    }
    return s / m;
}

}  // namespace

void StatsProfile::enforce_identities() {
    Decomposition d = decompose(grid.points(), xhat, xhat_slope, x_inc);
    x_het = std::move(d.x_het);
    eta_taste = std::move(d.eta_taste);
}

void StatsProfile::validate() const {
    const std::size_t n = grid.size();
    const std::vector<double>* cols[] = {&xhat, &xhat_slope, &x_inc, &x_het, &eta_taste, &eps_z, &eps_x, &mtr};
    for (auto* c : cols)
        if (c->size() != n) throw Error(ErrorCode::GridMismatch, "profile: column length differs from grid");
    if (var_x_inc && var_x_inc->size() != n) throw Error(ErrorCode::GridMismatch, "profile: var_x_inc length");
    if (gbar_plus && gbar_plus->size() != n) throw Error(ErrorCode::GridMismatch, "profile: gbar_plus length");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xhat[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "profile: xhat must be > 0");
        if (!(eps_x[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "profile: eps_x must be > 0");
        if (!(eps_z[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "profile: eps_z must be >= 0");
        if (!(mtr[i] < 1.0)) throw Error(ErrorCode::InvalidArgument, "profile: mtr must be < 1");
        if (var_x_inc && !((*var_x_inc)[i] >= 0.0)) throw Error(ErrorCode::NegativeVariance, "profile: var_x_inc < 0");
        for (auto* c : cols)
            if (!std::isfinite((*c)[i])) throw Error(ErrorCode::InvalidArgument, "profile: non-finite entry");
    }
}

Decomposition decompose(const std::vector<double>& z, const std::vector<double>& xhat,
                        const std::vector<double>& xhat_slope, const std::vector<double>& x_inc) {
    const std::size_t n = z.size();
    if (xhat.size() != n || xhat_slope.size() != n || x_inc.size() != n)
        throw Error(ErrorCode::GridMismatch, "decompose: profiles do not share a grid");
    Decomposition d;
    d.x_het.resize(n);
    d.eta_taste.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(xhat[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "decompose: xhat must be > 0");
        d.x_het[i] = xhat_slope[i] - x_inc[i];
        d.eta_taste[i] = z[i] * d.x_het[i] / xhat[i];
    }
    return d;
}

double extract_eps_z(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double step,
                     double tolerance) {
    const double z0 = base.z;
    double net = 1.0 - Agent(economy, type).income_mtr(z0);
    TaxPerturbation p, m;
    p.z_slope = step;
    p.z_anchor = z0;
    m.z_slope = -step;
    m.z_anchor = z0;
    double zp = Agent(economy, type, p).solve_near(z0).z;
    double zm = Agent(economy, type, m).solve_near(z0).z;
    double k = -net / (z0 * step);
    check_steps(k * (zp - z0), k * (z0 - zm), tolerance, "extract_eps_z");
    return k * (zp - zm) / 2.0;
}

double extract_eps_x(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double step,
                     double tolerance) {
    if (base.x == 0.0) return 0.0;
    const double x0 = base.x;
    double price = 1.0 + Agent(economy, type).commodity_mtr(x0);
    TaxPerturbation p, m;
    p.x_slope = step;
    p.x_anchor = x0;
    m.x_slope = -step;
    m.x_anchor = x0;
    double xp = Agent(economy, type, p).solve_inner(base.z).x;
    double xm = Agent(economy, type, m).solve_inner(base.z).x;
    double k = -price / (x0 * step);
    check_steps(k * (xp - x0), k * (x0 - xm), tolerance, "extract_eps_x");
    return k * (xp - xm) / 2.0;
}

double extract_x_inc(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double rel_step,
                     double tolerance) {
    if (base.x == 0.0) return 0.0;
    Agent a(economy, type);
    const double z0 = base.z, h = rel_step * z0;
    double xp = a.solve_inner(z0 + h).x, xm = a.solve_inner(z0 - h).x;
    check_steps((xp - base.x) / h, (base.x - xm) / h, tolerance, "extract_x_inc");
    return (xp - xm) / (2.0 * h);
}

double extract_cross_base(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base, double step,
                          double tolerance) {
    if (base.x == 0.0) return 0.0;
    const double x0 = base.x, z0 = base.z;
    TaxPerturbation p, m;
    p.x_slope = step;
    p.x_anchor = x0;
    m.x_slope = -step;
    m.x_anchor = x0;
    double zp = Agent(economy, type, p).solve_near(z0).z;
    double zm = Agent(economy, type, m).solve_near(z0).z;
    check_steps((zp - z0) / step, (z0 - zm) / step, tolerance, "extract_cross_base");
    return (zp - zm) / (2.0 * step);
}

double extract_transfer_response(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                                 double transfer) {
    TaxPerturbation p, m;
    p.lump_sum = transfer;
    m.lump_sum = -transfer;
    double zp = Agent(economy, type, p).solve_near(base.z).z;
    double zm = Agent(economy, type, m).solve_near(base.z).z;
    return (zp - zm) / (2.0 * transfer);
}

namespace {

AgentChoice solve_type(const SyntheticEconomy& economy, const AgentType& type) {
    economy.validate();
    return solve_agent(economy, type);
}

}  // namespace

double extract_eps_z(const SyntheticEconomy& economy, const AgentType& type, double step) {
    return extract_eps_z(economy, type, solve_type(economy, type), step);
}
double extract_eps_x(const SyntheticEconomy& economy, const AgentType& type, double step) {
    return extract_eps_x(economy, type, solve_type(economy, type), step);
}
double extract_x_inc(const SyntheticEconomy& economy, const AgentType& type, double rel_step) {
    return extract_x_inc(economy, type, solve_type(economy, type), rel_step);
}
double extract_cross_base(const SyntheticEconomy& economy, const AgentType& type, double step) {
    return extract_cross_base(economy, type, solve_type(economy, type), step);
}

AgentStats extract_agent(const SyntheticEconomy& economy, const AgentType& type, const AgentChoice& base,
                         const ExtractOptions& opt) {
    AgentStats s;
    s.choice = base;
    Agent a(economy, type);
    s.mtr_z = a.income_mtr(base.z);
    s.mtr_x = a.commodity_mtr(base.x);
    s.eps_z = extract_eps_z(economy, type, base, opt.rate_step, opt.step_tolerance);
    s.eps_x = extract_eps_x(economy, type, base, opt.rate_step, opt.step_tolerance);
    s.x_inc = extract_x_inc(economy, type, base, opt.income_step, opt.step_tolerance);
    s.cross_base = extract_cross_base(economy, type, base, opt.rate_step, opt.step_tolerance);
    double transfer = opt.transfer_step * a.disposable(base.z);
    s.dz_dI = extract_transfer_response(economy, type, base, transfer);
    if (base.x != 0.0) {
        TaxPerturbation p, m;
        p.lump_sum = transfer;
        m.lump_sum = -transfer;
        double xp = Agent(economy, type, p).solve_inner(base.z).x;
        double xm = Agent(economy, type, m).solve_inner(base.z).x;
        s.dx_dI = (xp - xm) / (2.0 * transfer);
    }
    return s;
}

double richardson_ratio(double f_h, double f_h2, double f_h4) { return (f_h - f_h2) / (f_h2 - f_h4); }

double augmented_weight(const AgentStats& s, double lambda, double damage) {
    double wedge = s.mtr_x - damage;
    return s.choice.u_c / lambda + wedge * s.dx_dI + (s.mtr_z + wedge * s.x_inc) * s.dz_dI;
}

EconomyProfile build_profile_from_economy(const SyntheticEconomy& economy, const ExtractOptions& opt) {
    return build_profile_from_choices(economy, solve_economy(economy), opt);
}

EconomyProfile build_profile_from_choices(const SyntheticEconomy& economy, std::vector<AgentChoice> choices,
                                          const ExtractOptions& opt) {
    economy.validate();
    EconomyProfile out;
    out.types = economy.types();
    if (choices.size() != out.types.size()) throw Error(ErrorCode::InvalidArgument, "profile: one choice per type required");
    out.choices = std::move(choices);
    for (std::size_t i = 0; i < out.types.size(); ++i)
        out.agents.push_back(extract_agent(economy, out.types[i], out.choices[i], opt));

    double uc = 0.0;
    for (std::size_t i = 0; i < out.types.size(); ++i) uc += out.types[i].weight * out.choices[i].u_c;
    out.lambda = uc;
    if (opt.damage) {
        const double d = *opt.damage;
        for (auto& s : out.agents) s.g = augmented_weight(s, out.lambda, d);
    }

    const std::size_t nw = economy.w_values.size(), nt = economy.theta_count();
    std::vector<double> mass(nw), z(nw), x(nw), xinc(nw), var(nw), ez(nw), exx(nw), gbar(nw);
    for (std::size_t i = 0; i < nw; ++i) {
        std::vector<double> w(nt), zs(nt), xs(nt), inc(nt), e(nt), exw(nt), gs(nt);
        for (std::size_t k = 0; k < nt; ++k) {
            const AgentStats& s = out.agents[i * nt + k];
            w[k] = out.types[i * nt + k].weight;
            zs[k] = s.choice.z;
            xs[k] = s.choice.x;
            inc[k] = s.x_inc;
            e[k] = s.eps_z;
            exw[k] = s.eps_x * s.choice.x;
            gs[k] = s.g;
        }
        mass[i] = std::accumulate(w.begin(), w.end(), 0.0);
        z[i] = weighted_mean(zs, w);
        x[i] = weighted_mean(xs, w);
        xinc[i] = weighted_mean(inc, w);
        double v = 0.0;
        for (std::size_t k = 0; k < nt; ++k) v += w[k] * (inc[k] - xinc[i]) * (inc[k] - xinc[i]);
        var[i] = nt == 1 ? 0.0 : v / mass[i];
        ez[i] = weighted_mean(e, w);
        exx[i] = x[i] > 0.0 ? weighted_mean(exw, w) / x[i] : 0.0;
        gbar[i] = weighted_mean(gs, w);
        if (i > 0 && !(z[i] > z[i - 1]))
            throw Error(ErrorCode::NonMonotone, "profile: cell incomes are not increasing in w");
    }
    out.cell_z = z;
    out.cell_x = x;
    out.xhat_curve = CubicSpline(z, x);

    StatsProfile& p = out.profile;
    double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (double& m : mass) m /= total;
    p.grid = IncomeGrid::from_masses(z, mass);
    p.xhat = x;
    p.xhat_slope.resize(nw);
    p.mtr.resize(nw);
    Agent probe(economy, out.types.front());
    for (std::size_t i = 0; i < nw; ++i) {
        p.xhat_slope[i] = out.xhat_curve.derivative(z[i]);
        p.mtr[i] = probe.income_mtr(z[i]);
    }
    p.x_inc = xinc;
    p.eps_z = ez;
    p.eps_x = exx;
    p.var_x_inc = var;
    if (opt.damage) {
        // average weight above each point, including the point itself
        std::vector<double> gp(nw);
        double num = 0.0, den = 0.0;
        for (std::size_t i = nw; i-- > 0;) {
            num += mass[i] * gbar[i];
            den += mass[i];
            gp[i] = num / den;
        }
        p.gbar_plus = gp;
    }
    p.enforce_identities();
    return out;
}

}  // namespace ctax
