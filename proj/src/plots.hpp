#pragma once

#include <string>
#include <vector>

#include "pipeline.hpp"
#include "statistics.hpp"

namespace ctax {

// One observation of a long-format plot table.
struct TidyRow {
    double z = 0.0;
    std::string series;
    double value = 0.0;
};

using TidyTable = std::vector<TidyRow>;

// xhat_slope, x_inc and x_het against income.
TidyTable decomposition_series(const StatsProfile& profile);
// Taste elasticity against income.
TidyTable taste_series(const StatsProfile& profile);
// Nonlinear schedule for each scenario, plus the damage constant.
TidyTable scenario_schedules(const StatsProfile& profile, double damage, const std::vector<Scenario>& scenarios);
// Nonlinear schedule, its variance-attenuated counterpart and the damage constant.
TidyTable unidim_vs_multidim(const StatsProfile& profile, double damage);

// CSV with header z,series,value and shortest round-trip numbers.
std::string format_tidy(const TidyTable& table);

}  // namespace ctax
