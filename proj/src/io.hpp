#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "oracle.hpp"
#include "pipeline.hpp"
#include "solver.hpp"

namespace ctax {

using Json = nlohmann::json;

std::string read_text(const std::string& path);
// Writes through a temporary file in the same directory, then renames.
void write_text(const std::string& path, const std::string& content);

// Strict number parsing: the whole field must be a finite number in C-locale syntax.
double parse_number(std::string_view field, const std::string& context);
long parse_integer(std::string_view field, const std::string& context);

// Comma-separated, dot decimal, mandatory header, optional UTF-8 byte order mark, LF or CRLF.
BinnedCrossSection parse_cross_section(std::string_view text);
SurveyMpcTable parse_survey(std::string_view text);
BinnedCrossSection read_cross_section(const std::string& path);
SurveyMpcTable read_survey(const std::string& path);
std::string format_cross_section(const BinnedCrossSection& cs);
std::string format_survey(const SurveyMpcTable& table);

// Shortest representation that round-trips to the same double.
std::string format_number(double v);

Json profile_to_json(const StatsProfile& p);
StatsProfile profile_from_json(const Json& j);
StatsProfile read_profile(const std::string& path);
void write_profile(const std::string& path, const StatsProfile& p);

struct EconomyConfig {
    SyntheticEconomy economy;
    std::optional<double> damage;
    std::optional<DamageCalibration> calibration;
    // damage if given, otherwise the Pigouvian rate of the calibration, otherwise 0.40
    double resolved_damage() const;
};

EconomyConfig economy_from_json(const Json& j);
Json economy_to_json(const EconomyConfig& cfg);
EconomyConfig read_economy(const std::string& path);

// Inputs of the estimation pipeline. Relative CSV paths resolve against the config file's directory.
struct CalibrationConfig {
    std::string cross_section, survey;
    std::string scenario = "benchmark";
    std::optional<double> damage;
    std::optional<DamageCalibration> calibration;
    SmoothingConfig smoothing;
    double resolved_damage() const;
};

CalibrationConfig calibration_config_from_json(const Json& j, const std::string& base_dir = "");
Json calibration_config_to_json(const CalibrationConfig& cfg);
CalibrationConfig read_calibration_config(const std::string& path);

Json solution_to_json(const Solution& s);
// z,rate rows for schedule methods; one method,damage,rate row for linear methods
std::string solution_to_csv(const Solution& s);

// name, value, tolerance and pass flag per check
Json verify_report_to_json(const VerifyReport& report);

}  // namespace ctax
