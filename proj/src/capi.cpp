#include "carbontax/carbontax.h"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "error.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"
#include "plots.hpp"
#include "solver.hpp"
#include "synthetic.hpp"

struct ctax_profile {
    ctax::StatsProfile profile;
    std::vector<std::string> warnings;
};

struct ctax_solution {
    ctax::Solution solution;
};

struct ctax_economy {
    ctax::EconomyConfig config;
};

namespace {

using ctax::Error;
using ctax::ErrorCode;

static_assert(static_cast<int>(ErrorCode::InvalidArgument) == CTAX_INVALID_ARGUMENT);
static_assert(static_cast<int>(ErrorCode::Io) == CTAX_IO);
static_assert(static_cast<int>(ErrorCode::GridMismatch) == CTAX_GRID_MISMATCH);
static_assert(static_cast<int>(ErrorCode::SingularDenominator) == CTAX_SINGULAR_DENOMINATOR);
static_assert(static_cast<int>(ErrorCode::SolverFailure) == CTAX_SOLVER_FAILURE);

thread_local std::string last_error;

// Runs f, translating exceptions into status codes and the thread's last error.
template <class F>
int guarded(F&& f) {
    try {
        f();
        last_error.clear();
        return CTAX_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return static_cast<int>(e.code());
    } catch (const std::exception& e) {
        last_error = std::string("internal: ") + e.what();
        return CTAX_INTERNAL;
    } catch (...) {
        last_error = "internal: unknown exception";
        return CTAX_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

void copy_text(const std::string& text, char* buf, std::size_t len) {
    if (!buf || len == 0) return;
    std::size_t n = std::min(text.size(), len - 1);
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
}

const std::vector<double>* column_of(const ctax::StatsProfile& p, const std::string& name) {
    if (name == "z") return &p.z();
    if (name == "h_z") return &p.grid.density();
    if (name == "xhat") return &p.xhat;
    if (name == "xhat_slope") return &p.xhat_slope;
    if (name == "x_inc") return &p.x_inc;
    if (name == "x_het") return &p.x_het;
    if (name == "eta_taste") return &p.eta_taste;
    if (name == "eps_z") return &p.eps_z;
    if (name == "eps_x") return &p.eps_x;
    if (name == "mtr") return &p.mtr;
    if (name == "var_x_inc") {
        if (!p.var_x_inc) throw Error(ErrorCode::MissingColumn, "profile has no var_x_inc column");
        return &*p.var_x_inc;
    }
    if (name == "gbar_plus") {
        if (!p.gbar_plus) throw Error(ErrorCode::MissingColumn, "profile has no gbar_plus column");
        return &*p.gbar_plus;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown profile column '" + name + "'");
}

std::string summary_line(const ctax::Solution& s) {
    using ctax::format_number;
    std::string line = std::string("method=") + ctax::method_name(s.method) + " damage=" + format_number(s.damage);
    if (s.is_scalar()) {
        line += " rate=" + format_number(s.scalar_rate);
    } else {
        auto [lo, hi] = std::minmax_element(s.rate.begin(), s.rate.end());
        line += " points=" + std::to_string(s.rate.size()) + " min_rate=" + format_number(*lo) +
                " max_rate=" + format_number(*hi);
    }
    line += " residual=" + format_number(s.report.residual) + " iterations=" + std::to_string(s.report.iterations);
    return line;
}

}  // namespace

extern "C" {

const char* ctax_last_error(void) { return last_error.c_str(); }

const char* ctax_status_name(int status) {
    if (status == CTAX_OK) return "Ok";
    if (status == CTAX_INTERNAL) return "Internal";
    if (status >= CTAX_INVALID_ARGUMENT && status <= CTAX_SOLVER_FAILURE)
        return ctax::error_name(static_cast<ErrorCode>(status));
    return "Unknown";
}

int ctax_pigouvian_rate(double scc_usd_per_ton, double kg_per_dollar, double lambda_norm, double* out) {
    return guarded([&] {
        require(out, "out");
        *out = ctax::pigouvian_rate({scc_usd_per_ton, kg_per_dollar, lambda_norm});
    });
}

int ctax_scenario_lookup(const char* name, double* eps_z, double* eps_x) {
    return guarded([&] {
        require(name, "name");
        ctax::Scenario s = ctax::find_scenario(name);
        if (eps_z) *eps_z = s.eps_z;
        if (eps_x) *eps_x = s.eps_x;
    });
}

size_t ctax_scenario_count(void) { return ctax::scenario_table().size(); }

const char* ctax_scenario_name(size_t index) {
    const auto& t = ctax::scenario_table();
    return index < t.size() ? t[index].name.c_str() : nullptr;
}

int ctax_generate_bundled(uint64_t seed, const char* out_dir) {
    return guarded([&] {
        require(out_dir, "out_dir");
        namespace fs = std::filesystem;
        ctax::CalibrationData cal = ctax::bundled_calibration(seed);
        std::string cs = ctax::format_cross_section(cal.cross_section);
        std::string sv = ctax::format_survey(cal.survey);
        ctax::CalibrationConfig cfg;
        cfg.cross_section = "cross_section.csv";
        cfg.survey = "survey.csv";
        cfg.calibration = ctax::DamageCalibration{200.0, 2.0, 1.0};
        std::string js = ctax::calibration_config_to_json(cfg).dump(2) + "\n";
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + std::string(out_dir) + "'");
        fs::path dir(out_dir);
        ctax::write_text((dir / "cross_section.csv").string(), cs);
        ctax::write_text((dir / "survey.csv").string(), sv);
        ctax::write_text((dir / "calibration.json").string(), js);
    });
}

int ctax_calibrate(const char* config_path, const char* scenario, ctax_profile** out) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out, "out");
        *out = nullptr;
        ctax::CalibrationConfig cfg = ctax::read_calibration_config(config_path);
        ctax::Scenario sc = ctax::find_scenario(scenario ? scenario : cfg.scenario);
        ctax::BinnedCrossSection cs = ctax::read_cross_section(cfg.cross_section);
        ctax::SurveyMpcTable survey = ctax::read_survey(cfg.survey);
        ctax::PipelineResult res = ctax::run_pipeline(cs, survey, sc.eps_z, sc.eps_x, cfg.smoothing);
        *out = new ctax_profile{std::move(res.profile), std::move(res.warnings)};
    });
}

int ctax_config_damage(const char* config_path, double* out) {
    return guarded([&] {
        require(config_path, "config_path");
        require(out, "out");
        *out = ctax::read_calibration_config(config_path).resolved_damage();
    });
}

int ctax_profile_load(const char* path, ctax_profile** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        *out = new ctax_profile{ctax::read_profile(path), {}};
    });
}

int ctax_profile_save(const ctax_profile* profile, const char* path) {
    return guarded([&] {
        require(profile, "profile");
        require(path, "path");
        ctax::write_profile(path, profile->profile);
    });
}

void ctax_profile_free(ctax_profile* profile) { delete profile; }

size_t ctax_profile_size(const ctax_profile* profile) { return profile ? profile->profile.size() : 0; }

int ctax_profile_column(const ctax_profile* profile, const char* name, double* buf, size_t len) {
    return guarded([&] {
        require(profile, "profile");
        require(name, "name");
        require(buf, "buf");
        const std::vector<double>* col = column_of(profile->profile, name);
        if (len < col->size()) throw Error(ErrorCode::OutOfRange, "buffer shorter than the profile");
        std::copy(col->begin(), col->end(), buf);
    });
}

int ctax_profile_with_scenario(const ctax_profile* profile, const char* scenario, ctax_profile** out) {
    return guarded([&] {
        require(profile, "profile");
        require(scenario, "scenario");
        require(out, "out");
        *out = nullptr;
        ctax::Scenario sc = ctax::find_scenario(scenario);
        *out = new ctax_profile{ctax::with_elasticities(profile->profile, sc.eps_z, sc.eps_x), profile->warnings};
    });
}

size_t ctax_profile_warning_count(const ctax_profile* profile) { return profile ? profile->warnings.size() : 0; }

const char* ctax_profile_warning(const ctax_profile* profile, size_t index) {
    if (!profile || index >= profile->warnings.size()) return nullptr;
    return profile->warnings[index].c_str();
}

int ctax_economy_load(const char* path, ctax_economy** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = nullptr;
        *out = new ctax_economy{ctax::read_economy(path)};
    });
}

void ctax_economy_free(ctax_economy* economy) { delete economy; }

int ctax_economy_damage(const ctax_economy* economy, double* out) {
    return guarded([&] {
        require(economy, "economy");
        require(out, "out");
        *out = economy->config.resolved_damage();
    });
}

int ctax_economy_profile(const ctax_economy* economy, ctax_profile** out) {
    return guarded([&] {
        require(economy, "economy");
        require(out, "out");
        *out = nullptr;
        ctax::ExtractOptions ex;
        ex.damage = economy->config.resolved_damage();
        ctax::EconomyProfile ep = ctax::build_profile_from_economy(economy->config.economy, ex);
        *out = new ctax_profile{std::move(ep.profile), {}};
    });
}

int ctax_solve(const ctax_profile* profile, const char* method, double damage, ctax_solution** out) {
    return guarded([&] {
        require(profile, "profile");
        require(method, "method");
        require(out, "out");
        *out = nullptr;
        ctax::Method m = ctax::parse_method(method);
        *out = new ctax_solution{ctax::solve(profile->profile, damage, m)};
    });
}

void ctax_solution_free(ctax_solution* solution) { delete solution; }

int ctax_solution_is_scalar(const ctax_solution* solution) { return solution && solution->solution.is_scalar() ? 1 : 0; }

int ctax_solution_scalar_rate(const ctax_solution* solution, double* out) {
    return guarded([&] {
        require(solution, "solution");
        require(out, "out");
        if (!solution->solution.is_scalar()) throw Error(ErrorCode::InvalidArgument, "solution is a schedule");
        *out = solution->solution.scalar_rate;
    });
}

size_t ctax_solution_size(const ctax_solution* solution) { return solution ? solution->solution.rate.size() : 0; }

int ctax_solution_schedule(const ctax_solution* solution, double* z, double* rate, size_t len) {
    return guarded([&] {
        require(solution, "solution");
        const ctax::Solution& s = solution->solution;
        if (s.is_scalar()) throw Error(ErrorCode::InvalidArgument, "solution is a single rate");
        if (len < s.rate.size()) throw Error(ErrorCode::OutOfRange, "buffer shorter than the schedule");
        if (z) std::copy(s.z.begin(), s.z.end(), z);
        if (rate) std::copy(s.rate.begin(), s.rate.end(), rate);
    });
}

int ctax_solution_write(const ctax_solution* solution, const char* json_path, const char* csv_path) {
    return guarded([&] {
        require(solution, "solution");
        std::string js = ctax::solution_to_json(solution->solution).dump() + "\n";
        std::string csv = ctax::solution_to_csv(solution->solution);
        if (json_path) ctax::write_text(json_path, js);
        if (csv_path) ctax::write_text(csv_path, csv);
    });
}

int ctax_solution_summary(const ctax_solution* solution, char* buf, size_t len) {
    return guarded([&] {
        require(solution, "solution");
        require(buf, "buf");
        copy_text(summary_line(solution->solution), buf, len);
    });
}

int ctax_verify(const ctax_economy* economy, double damage, const char* report_path, int* passed, char* summary,
                size_t summary_len) {
    return guarded([&] {
        require(economy, "economy");
        require(passed, "passed");
        ctax::VerifyReport rep = ctax::run_oracle_suite(economy->config.economy, damage);
        if (report_path) ctax::write_text(report_path, ctax::verify_report_to_json(rep).dump(2) + "\n");
        std::string failing;
        for (const ctax::VerifyCheck& c : rep.checks)
            if (!c.pass) failing += (failing.empty() ? "" : ",") + c.name;
        *passed = rep.passed() ? 1 : 0;
        copy_text(failing, summary, summary_len);
    });
}

int ctax_emit_plots(const ctax_profile* profile, double damage, const char* out_dir) {
    return guarded([&] {
        require(profile, "profile");
        require(out_dir, "out_dir");
        namespace fs = std::filesystem;
        const ctax::StatsProfile& p = profile->profile;
        // build every table before touching the file system
        std::string decomposition = ctax::format_tidy(ctax::decomposition_series(p));
        std::string taste = ctax::format_tidy(ctax::taste_series(p));
        std::string schedules = ctax::format_tidy(ctax::scenario_schedules(p, damage, ctax::scenario_table()));
        std::string comparison = ctax::format_tidy(ctax::unidim_vs_multidim(p, damage));
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw Error(ErrorCode::Io, "cannot create directory '" + std::string(out_dir) + "'");
        fs::path dir(out_dir);
        ctax::write_text((dir / "decomposition.csv").string(), decomposition);
        ctax::write_text((dir / "taste_elasticity.csv").string(), taste);
        ctax::write_text((dir / "schedules_by_scenario.csv").string(), schedules);
        ctax::write_text((dir / "unidim_vs_multidim.csv").string(), comparison);
    });
}

}  // extern "C"
