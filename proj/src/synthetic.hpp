#pragma once

#include <cstdint>

#include "pipeline.hpp"
#include "statistics.hpp"

namespace ctax {

// n equally weighted productivity types spread log-evenly over [w_lo, w_hi].
SyntheticEconomy log_spaced_population(std::size_t n, double w_lo, double w_hi, const UtilityParams& utility,
                                       const TaxSystem& tax);

struct CalibrationData {
    BinnedCrossSection cross_section;
    SurveyMpcTable survey;
};

// Cross-section rows from the income cells of a solved economy and one survey respondent per agent.
// The dirty share is x over after-tax income, so the savings adjustment returns x exactly; the survey
// MPC is dx/dI at fixed taxable income. Cells must carry at least one percent of mass each.
CalibrationData export_calibration(const SyntheticEconomy& economy, const EconomyProfile& ep);

// Bundled synthetic calibration: 100 percentile rows whose dirty share falls from about 11% to 5%
// and whose taste elasticity is positive, negative, then positive with crossings near 52,000 and
// 160,000; a survey with decile MPC variances declining from about 0.013 to 0.004.
CalibrationData bundled_calibration(std::uint64_t seed = 20240601, std::size_t respondents = 5000);

}  // namespace ctax
