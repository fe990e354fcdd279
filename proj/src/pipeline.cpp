#include "pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <system_error>

#include <Eigen/Dense>

#include "error.hpp"
#include "smoothing.hpp"

namespace ctax {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

bool same_grid(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::fabs(a[i] - b[i]) > 1e-12 * std::max(1.0, std::fabs(a[i]))) return false;
    return true;
}

std::vector<double> logs(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
    return out;
}

// Linear interpolation in log income, flat beyond the ends.
double interp_log(const GridCurve& c, double z) {
    if (z <= c.z.front()) return c.value.front();
    if (z >= c.z.back()) return c.value.back();
    std::size_t k = static_cast<std::size_t>(std::upper_bound(c.z.begin(), c.z.end(), z) - c.z.begin());
    double l0 = std::log(c.z[k - 1]), l1 = std::log(c.z[k]);
    double s = (std::log(z) - l0) / (l1 - l0);
    return c.value[k - 1] + s * (c.value[k] - c.value[k - 1]);
}

void check_curve(const GridCurve& c, const char* what) {
    if (c.z.size() != c.value.size() || c.z.empty())
        throw Error(ErrorCode::GridMismatch, std::string(what) + ": curve columns differ in length");
}

}  // namespace

void BinnedCrossSection::validate() const {
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "cross section: no rows");
    std::set<int> seen;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.percentile < 1 || r.percentile > 100)
            throw Error(ErrorCode::InvalidArgument, "cross section: percentile outside 1..100");
        if (!seen.insert(r.percentile).second)
            throw Error(ErrorCode::InvalidArgument, "cross section: duplicate percentile " + std::to_string(r.percentile));
        if (i > 0 && !(r.percentile > rows[i - 1].percentile))
            throw Error(ErrorCode::InvalidArgument, "cross section: rows not ordered by percentile");
        if (!std::isfinite(r.mean_income) || !(r.mean_income > 0.0))
            throw Error(ErrorCode::InvalidArgument, "cross section: mean_income must be positive");
        if (i > 0 && !(r.mean_income > rows[i - 1].mean_income))
            throw Error(ErrorCode::NonMonotone, "cross section: mean_income not strictly increasing at percentile " +
                                                    std::to_string(r.percentile));
        if (!std::isfinite(r.mean_after_tax_income))
            throw Error(ErrorCode::InvalidArgument, "cross section: non-finite after-tax income");
        if (!(r.dirty_share >= 0.0 && r.dirty_share < 1.0))
            throw Error(ErrorCode::InvalidArgument, "cross section: dirty_share outside [0, 1)");
        if (r.mean_x_level && !(std::isfinite(*r.mean_x_level) && *r.mean_x_level >= 0.0))
            throw Error(ErrorCode::InvalidArgument, "cross section: mean_x_level must be non-negative");
    }
}

void SurveyMpcTable::validate() const {
    if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "survey: no rows");
    for (const auto& r : rows) {
        if (!std::isfinite(r.taxable_income) || !(r.taxable_income > 0.0))
            throw Error(ErrorCode::InvalidArgument, "survey: taxable_income must be positive (id " + r.id + ")");
        if (!(r.mpc_dirty_share >= 0.0 && r.mpc_dirty_share <= 1.0))
            throw Error(ErrorCode::InvalidArgument, "survey: mpc_dirty_share outside [0, 1] (id " + r.id + ")");
        if (!std::isfinite(r.total_mpc)) throw Error(ErrorCode::InvalidArgument, "survey: non-finite total_mpc");
    }
}

void SmoothingConfig::validate() const {
    if (grid_size < 100) throw Error(ErrorCode::InvalidArgument, "smoothing config: grid_size must be at least 100");
    if (!log_spaced) throw Error(ErrorCode::InvalidArgument, "smoothing config: the grid is always log-spaced");
    if (poly_degree_mpc < 1 || poly_degree_mpc > 3)
        throw Error(ErrorCode::InvalidArgument, "smoothing config: poly_degree_mpc must be 1, 2 or 3");
    if (spline_penalty && !(*spline_penalty >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "smoothing config: negative spline penalty");
    if (!(grid_floor > 0.0 && grid_cap > grid_floor))
        throw Error(ErrorCode::InvalidArgument, "smoothing config: grid bounds");
    if (!(mtr_lower < mtr_upper && mtr_upper < 1.0))
        throw Error(ErrorCode::InvalidArgument, "smoothing config: MTR band");
    if (!(variance_bandwidth > 0.0))
        throw Error(ErrorCode::InvalidArgument, "smoothing config: variance_bandwidth must be positive");
}

PointSeries savings_adjust(const BinnedCrossSection& cs) {
    PointSeries out;
    for (const auto& r : cs.rows) {
        if (!std::isfinite(r.dirty_share) || !std::isfinite(r.mean_after_tax_income))
            throw Error(ErrorCode::MissingColumn, "savings_adjust: dirty_share and after-tax income required");
        out.z.push_back(r.mean_income);
        out.value.push_back(r.dirty_share * r.mean_after_tax_income);
    }
    return out;
}

double PolynomialFit::value(double z) const {
    double v = 0.0;
    for (std::size_t j = coef.size(); j-- > 0;) v = v * z + coef[j];
    return v;
}

std::vector<double> PolynomialFit::evaluate(const std::vector<double>& z) const {
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = value(z[i]);
    return out;
}

PolynomialFit fit_mpc_curve(const SurveyMpcTable& table, const SmoothingConfig& cfg) {
    cfg.validate();
    return fit_mpc_curve(table, cfg.poly_degree_mpc);
}

PolynomialFit fit_mpc_curve(const SurveyMpcTable& table, int degree) {
    table.validate();
    if (degree < 0 || degree > 3) throw Error(ErrorCode::InvalidArgument, "fit_mpc_curve: degree must be in 0..3");
    const std::size_t n = table.rows.size();
    const std::size_t p = static_cast<std::size_t>(degree) + 1;
    if (n < 3 * p)
        throw Error(ErrorCode::InsufficientSupport, "fit_mpc_curve: need at least " + std::to_string(3 * p) + " rows");

    // centered and scaled income keeps the design well conditioned
    double center = 0.0;
    for (const auto& r : table.rows) center += r.taxable_income;
    center /= static_cast<double>(n);
    double scale = 0.0;
    for (const auto& r : table.rows) scale = std::max(scale, std::fabs(r.taxable_income - center));
    if (degree >= 1 && !(scale > 0.0))
        throw Error(ErrorCode::RankDeficient, "fit_mpc_curve: all incomes equal, degree >= 1 is not identified");
    if (!(scale > 0.0)) scale = 1.0;

    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = (table.rows[i].taxable_income - center) / scale;
        double v = 1.0;
        for (std::size_t j = 0; j < p; ++j, v *= s) X(i, j) = v;
        y(i) = table.rows[i].mpc_dirty_share;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p))
        throw Error(ErrorCode::RankDeficient, "fit_mpc_curve: design matrix has rank " + std::to_string(qr.rank()) +
                                                  " < " + std::to_string(p));
    Eigen::VectorXd b = qr.solve(y);
    Eigen::VectorXd fitted = X * b;
    double rss = (y - fitted).squaredNorm();
    double dof = static_cast<double>(n - p);
    double sigma2 = rss / dof;
    Eigen::MatrixXd cov_s = sigma2 * (X.transpose() * X).inverse();

    // raw coefficients a = T b with T(i, j) = C(j, i) (-center)^(j-i) / scale^j
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        double binom = 1.0;
        for (std::size_t i = 0; i <= j; ++i) {
            if (i > 0) binom = binom * static_cast<double>(j - i + 1) / static_cast<double>(i);
            T(i, j) = binom * std::pow(-center, static_cast<double>(j - i)) / std::pow(scale, static_cast<double>(j));
        }
    }
    Eigen::VectorXd a = T * b;
    Eigen::MatrixXd cov = T * cov_s * T.transpose();

    PolynomialFit fit;
    fit.coef.assign(a.data(), a.data() + p);
    fit.covariance.resize(p * p);
    for (std::size_t i = 0; i < p; ++i) {
        fit.std_error.push_back(std::sqrt(std::max(0.0, cov(i, i))));
        for (std::size_t j = 0; j < p; ++j) fit.covariance[i * p + j] = cov(i, j);
    }
    fit.fitted.assign(fitted.data(), fitted.data() + n);
    fit.residual_sd = std::sqrt(sigma2);
    return fit;
}

GridCurve rescale_mpc(const GridCurve& dx_dI, const GridCurve& mtr) {
    check_curve(dx_dI, "rescale_mpc");
    check_curve(mtr, "rescale_mpc");
    if (!same_grid(dx_dI.z, mtr.z)) throw Error(ErrorCode::GridMismatch, "rescale_mpc: curves on different grids");
    GridCurve out;
    out.z = dx_dI.z;
    out.value.resize(out.z.size());
    for (std::size_t i = 0; i < out.z.size(); ++i) out.value[i] = (1.0 - mtr.value[i]) * dx_dI.value[i];
    return out;
}

MtrRecovery recover_mtr(const BinnedCrossSection& cs, const std::vector<double>& grid, const SmoothingConfig& cfg) {
    cfg.validate();
    cs.validate();
    if (cs.rows.size() < 4) throw Error(ErrorCode::InsufficientSupport, "recover_mtr: need at least 4 rows");
    std::vector<double> lz, la;
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        const auto& r = cs.rows[i];
        if (!(r.mean_after_tax_income > 0.0))
            throw Error(ErrorCode::NonMonotoneAfterTax, "recover_mtr: after-tax income must be positive");
        if (i > 0 && !(r.mean_after_tax_income > cs.rows[i - 1].mean_after_tax_income))
            throw Error(ErrorCode::NonMonotoneAfterTax,
                        "recover_mtr: after-tax income not increasing at percentile " + std::to_string(r.percentile));
        lz.push_back(std::log(r.mean_income));
        la.push_back(std::log(r.mean_after_tax_income));
    }
    SmoothingFit fit = smoothing_spline(lz, la, cfg.spline_penalty);
    MtrRecovery out;
    out.penalty = fit.alpha;
    out.mtr.z = grid;
    out.mtr.value.resize(grid.size());
    out.raw.resize(grid.size());
    std::size_t run_start = 0;
    int run_side = 0;
    auto flush = [&](std::size_t end) {
        if (run_side == 0) return;
        double bound = run_side > 0 ? cfg.mtr_upper : cfg.mtr_lower;
        out.warnings.push_back("T'_z clamped to " + fmt(bound) + " on z in [" + fmt(grid[run_start]) + ", " +
                               fmt(grid[end - 1]) + "] (" + std::to_string(end - run_start) + " points)");
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double t = std::log(grid[i]);
        double a = std::exp(fit.spline.value(t));
        double m = 1.0 - a / grid[i] * fit.spline.derivative(t);
        out.raw[i] = m;
        int side = m > cfg.mtr_upper ? 1 : (m < cfg.mtr_lower ? -1 : 0);
        if (side != run_side) {
            flush(i);
            run_start = i;
            run_side = side;
        }
        out.mtr.value[i] = std::clamp(m, cfg.mtr_lower, cfg.mtr_upper);
    }
    flush(grid.size());
    return out;
}

SmoothedProfiles smooth_profiles(const PointSeries& xhat, const PointSeries& x_inc, const std::vector<double>& grid,
                                 const SmoothingConfig& cfg) {
    cfg.validate();
    if (xhat.z.size() != xhat.value.size() || x_inc.z.size() != x_inc.value.size())
        throw Error(ErrorCode::GridMismatch, "smooth_profiles: point columns differ in length");
    if (xhat.z.size() < 10)
        throw Error(ErrorCode::InsufficientSupport, "smooth_profiles: need at least 10 x-hat points");
    for (std::size_t i = 0; i < xhat.z.size(); ++i)
        if (!(xhat.z[i] > 0.0) || !(xhat.value[i] > 0.0))
            throw Error(ErrorCode::InvalidArgument, "smooth_profiles: income and x-hat must be positive for log smoothing");

    SmoothedProfiles out;
    SmoothingFit fx = smoothing_spline(logs(xhat.z), logs(xhat.value), cfg.spline_penalty);
    out.penalty = fx.alpha;
    out.xhat.z = out.xhat_slope.z = out.x_inc.z = grid;
    for (double z : grid) {
        double t = std::log(z);
        double level = std::exp(fx.spline.value(t));
        out.xhat.value.push_back(level);
        out.xhat_slope.value.push_back(level / z * fx.spline.derivative(t));
    }

    if (same_grid(x_inc.z, grid)) {
        out.x_inc.value = x_inc.value;
    } else {
        if (x_inc.z.size() < 10)
            throw Error(ErrorCode::InsufficientSupport, "smooth_profiles: need at least 10 x_inc points");
        SmoothingFit fi = smoothing_spline(logs(x_inc.z), x_inc.value, cfg.spline_penalty);
        for (double z : grid) out.x_inc.value.push_back(fi.spline.value(std::log(z)));
    }
    return out;
}

DecileVariance variance_by_decile(const SurveyMpcTable& table, const GridCurve& mtr, const SmoothingConfig& cfg) {
    cfg.validate();
    table.validate();
    check_curve(mtr, "variance_by_decile");
    const std::size_t n = table.rows.size();

    std::vector<std::pair<double, double>> resp(n);  // (income, x_inc)
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = table.rows[i];
        resp[i] = {r.taxable_income, (1.0 - interp_log(mtr, r.taxable_income)) * r.mpc_dirty_share};
    }
    std::sort(resp.begin(), resp.end());

    // cut points at equal-count positions; intervals [cut_k, cut_k+1), the last one closed
    std::vector<double> cut(11);
    cut[0] = resp.front().first;
    for (std::size_t k = 1; k < 10; ++k) cut[k] = resp[k * n / 10].first;
    cut[10] = resp.back().first;

    DecileVariance out;
    std::vector<std::vector<double>> groups(10);
    for (const auto& [z, v] : resp) {
        std::size_t k = static_cast<std::size_t>(std::upper_bound(cut.begin() + 1, cut.begin() + 10, z) - (cut.begin() + 1));
        groups[k].push_back(v);
    }
    for (std::size_t k = 0; k < 10; ++k) {
        auto& g = groups[k];
        if (g.size() < 10)
            throw Error(ErrorCode::SparseDecile, "variance_by_decile: decile " + std::to_string(k + 1) + " has " +
                                                     std::to_string(g.size()) + " respondents");
        std::sort(g.begin(), g.end());
        // shifted two-pass sums, exact zero for identical values
        const double shift = g.front(), cnt = static_cast<double>(g.size());
        double mean = 0.0;
        for (double v : g) mean += v - shift;
        mean /= cnt;
        double ss = 0.0;
        for (double v : g) ss += (v - shift - mean) * (v - shift - mean);
        out.lower.push_back(cut[k]);
        out.upper.push_back(cut[k + 1]);
        out.count.push_back(g.size());
        out.variance.push_back(ss / static_cast<double>(g.size()));
    }

    out.step.z = mtr.z;
    for (double z : mtr.z) {
        std::size_t k = static_cast<std::size_t>(std::upper_bound(cut.begin() + 1, cut.begin() + 10, z) - (cut.begin() + 1));
        out.step.value.push_back(out.variance[k]);
    }
    out.smoothed.z = mtr.z;
    if (mtr.z.size() < 4) {
        out.smoothed.value = out.step.value;
        return out;
    }
    std::vector<double> lz = logs(mtr.z);
    double spacing = (lz.back() - lz.front()) / static_cast<double>(lz.size() - 1);
    double penalty = std::pow(cfg.variance_bandwidth, 4.0) / spacing;
    SmoothingFit f = smoothing_spline(lz, out.step.value, penalty);
    for (std::size_t i = 0; i < lz.size(); ++i) out.smoothed.value.push_back(std::max(0.0, f.spline.y()[i]));
    return out;
}

std::vector<double> pipeline_grid(const BinnedCrossSection& cs, const SurveyMpcTable& table,
                                  const SmoothingConfig& cfg) {
    cfg.validate();
    cs.validate();
    double lo = cs.rows.front().mean_income, hi = cs.rows.back().mean_income;
    if (!table.rows.empty()) {
        auto [mn, mx] = std::minmax_element(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
            return a.taxable_income < b.taxable_income;
        });
        lo = std::max(lo, mn->taxable_income);
        hi = std::min(hi, mx->taxable_income);
    }
    lo = std::max(lo, cfg.grid_floor);
    hi = std::min(hi, cfg.grid_cap);
    if (!(hi > lo)) throw Error(ErrorCode::InsufficientSupport, "pipeline_grid: data span is empty after clipping");
    return log_grid(lo, hi, cfg.grid_size);
}

IncomeGrid percentile_density(const BinnedCrossSection& cs, const std::vector<double>& grid) {
    cs.validate();
    if (cs.rows.size() < 2) throw Error(ErrorCode::InsufficientSupport, "percentile_density: need two percentiles");
    std::vector<double> z, cdf;
    for (const auto& r : cs.rows) {
        z.push_back(r.mean_income);
        cdf.push_back((r.percentile - 0.5) / 100.0);
    }
    MonotoneCubic H(z, cdf);
    std::vector<double> density(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) density[i] = std::max(0.0, H.derivative(grid[i]));
    return IncomeGrid::normalized(grid, std::move(density));
}

StatsProfile assemble_profile(const PipelineOutputs& out, double eps_z, double eps_x) {
    if (!(eps_z >= 0.0) || !std::isfinite(eps_z)) throw Error(ErrorCode::InvalidArgument, "assemble_profile: eps_z must be >= 0");
    if (!(eps_x > 0.0) || !std::isfinite(eps_x)) throw Error(ErrorCode::InvalidArgument, "assemble_profile: eps_x must be > 0");
    const auto& z = out.grid.points();
    const GridCurve* curves[] = {&out.xhat, &out.xhat_slope, &out.x_inc, &out.mtr};
    for (auto* c : curves) {
        check_curve(*c, "assemble_profile");
        if (!same_grid(c->z, z)) throw Error(ErrorCode::GridMismatch, "assemble_profile: component grids differ");
    }
    if (out.var_x_inc) {
        check_curve(*out.var_x_inc, "assemble_profile");
        if (!same_grid(out.var_x_inc->z, z)) throw Error(ErrorCode::GridMismatch, "assemble_profile: variance grid differs");
    }
    StatsProfile p;
    p.grid = out.grid;
    p.xhat = out.xhat.value;
    p.xhat_slope = out.xhat_slope.value;
    p.x_inc = out.x_inc.value;
    p.mtr = out.mtr.value;
    p.eps_z.assign(z.size(), eps_z);
    p.eps_x.assign(z.size(), eps_x);
    if (out.var_x_inc) p.var_x_inc = out.var_x_inc->value;
    p.enforce_identities();
    p.validate();
    return p;
}

PipelineResult run_pipeline(const BinnedCrossSection& cs, const SurveyMpcTable& table, double eps_z, double eps_x,
                            const SmoothingConfig& cfg) {
    cfg.validate();
    cs.validate();
    table.validate();
    PipelineResult res;
    std::vector<double> grid = pipeline_grid(cs, table, cfg);

    res.mtr = recover_mtr(cs, grid, cfg);
    res.warnings = res.mtr.warnings;

    res.mpc = fit_mpc_curve(table, cfg);
    GridCurve dx_dI{grid, res.mpc.evaluate(grid)};
    GridCurve x_inc = rescale_mpc(dx_dI, res.mtr.mtr);

    PointSeries xhat_points = savings_adjust(cs);
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        const auto& r = cs.rows[i];
        if (r.mean_x_level && std::fabs(*r.mean_x_level - xhat_points.value[i]) > 1e-6 * std::max(1.0, *r.mean_x_level))
            res.warnings.push_back("mean_x_level differs from share times after-tax income at percentile " +
                                   std::to_string(r.percentile));
    }
    res.smoothed = smooth_profiles(xhat_points, PointSeries{x_inc.z, x_inc.value}, grid, cfg);
    res.variance = variance_by_decile(table, res.mtr.mtr, cfg);

    PipelineOutputs out;
    out.grid = percentile_density(cs, grid);
    out.xhat = res.smoothed.xhat;
    out.xhat_slope = res.smoothed.xhat_slope;
    out.x_inc = res.smoothed.x_inc;
    out.mtr = res.mtr.mtr;
    out.var_x_inc = res.variance.smoothed;
    res.profile = assemble_profile(out, eps_z, eps_x);
    return res;
}

const std::vector<Scenario>& scenario_table() {
    static const std::vector<Scenario> table = {
        {"benchmark", 0.33, 0.5},
        {"high-eti", 0.7, 0.5},
        {"high-eti-low-demand", 0.7, 0.25},
        {"low-demand", 0.33, 0.25},
        {"high-demand", 0.33, 0.75},
    };
    return table;
}

Scenario find_scenario(const std::string& name) {
    for (const Scenario& s : scenario_table())
        if (s.name == name) return s;
    const std::string prefix = "custom:";
    if (name.rfind(prefix, 0) == 0) {
        std::string rest = name.substr(prefix.size());
        std::size_t comma = rest.find(',');
        if (comma != std::string::npos) {
            double ez = 0.0, ex = 0.0;
            std::string a = rest.substr(0, comma), b = rest.substr(comma + 1);
            auto ra = std::from_chars(a.data(), a.data() + a.size(), ez);
            auto rb = std::from_chars(b.data(), b.data() + b.size(), ex);
            bool whole = ra.ec == std::errc() && ra.ptr == a.data() + a.size() && rb.ec == std::errc() &&
                         rb.ptr == b.data() + b.size();
            if (whole && ez > 0.0 && ex > 0.0 && std::isfinite(ez) && std::isfinite(ex)) return {name, ez, ex};
        }
        throw Error(ErrorCode::InvalidArgument, "scenario: custom needs two positive constants, got '" + name + "'");
    }
    std::string known;
    for (const Scenario& s : scenario_table()) known += (known.empty() ? "" : ", ") + s.name;
    throw Error(ErrorCode::InvalidArgument, "scenario: unknown '" + name + "' (known: " + known + ", custom:EZ,EX)");
}

StatsProfile with_elasticities(const StatsProfile& profile, double eps_z, double eps_x) {
    if (!(eps_z > 0.0) || !(eps_x > 0.0) || !std::isfinite(eps_z) || !std::isfinite(eps_x))
        throw Error(ErrorCode::InvalidArgument, "with_elasticities: constants must be positive");
    StatsProfile p = profile;
    p.eps_z.assign(p.size(), eps_z);
    p.eps_x.assign(p.size(), eps_x);
    p.validate();
    return p;
}

}  // namespace ctax
