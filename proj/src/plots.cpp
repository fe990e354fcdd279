#include "plots.hpp"

#include "error.hpp"
#include "io.hpp"
#include "solver.hpp"

namespace ctax {

namespace {

void append(TidyTable& t, const std::vector<double>& z, const std::string& series, const std::vector<double>& v) {
    if (z.size() != v.size()) throw Error(ErrorCode::GridMismatch, "plot series '" + series + "': length mismatch");
    for (std::size_t i = 0; i < z.size(); ++i) t.push_back({z[i], series, v[i]});
}

void require_points(const StatsProfile& p) {
    if (p.size() == 0) throw Error(ErrorCode::InvalidArgument, "plot: profile has no grid points");
    p.validate();
}

}  // namespace

TidyTable decomposition_series(const StatsProfile& profile) {
    require_points(profile);
    TidyTable t;
    append(t, profile.z(), "xhat_slope", profile.xhat_slope);
    append(t, profile.z(), "x_inc", profile.x_inc);
    append(t, profile.z(), "x_het", profile.x_het);
    return t;
}

TidyTable taste_series(const StatsProfile& profile) {
    require_points(profile);
    TidyTable t;
    append(t, profile.z(), "eta_taste", profile.eta_taste);
    return t;
}

TidyTable scenario_schedules(const StatsProfile& profile, double damage, const std::vector<Scenario>& scenarios) {
    require_points(profile);
    TidyTable t;
    for (const Scenario& s : scenarios) {
        Solution sol = solve_nonlinear(with_elasticities(profile, s.eps_z, s.eps_x), damage);
        append(t, sol.z, s.name, sol.rate);
    }
    append(t, profile.z(), "damage", std::vector<double>(profile.size(), damage));
    return t;
}

TidyTable unidim_vs_multidim(const StatsProfile& profile, double damage) {
    require_points(profile);
    if (!profile.var_x_inc) throw Error(ErrorCode::MissingColumn, "plot: profile lacks var_x_inc");
    TidyTable t;
    Solution uni = solve_nonlinear(profile, damage);
    Solution multi = solve_multidim_pointwise(profile, damage);
    append(t, uni.z, "unidim", uni.rate);
    append(t, multi.z, "multidim", multi.rate);
    append(t, profile.z(), "damage", std::vector<double>(profile.size(), damage));
    return t;
}

std::string format_tidy(const TidyTable& table) {
    std::string out = "z,series,value\n";
    for (const TidyRow& r : table) {
        out += format_number(r.z);
        out += ',';
        out += r.series;
        out += ',';
        out += format_number(r.value);
        out += '\n';
    }
    return out;
}

}  // namespace ctax
