#pragma once

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CARBONTAX_BUILDING_DLL)
#define CARBONTAX_API __declspec(dllexport)
#else
#define CARBONTAX_API __declspec(dllimport)
#endif
#else
#define CARBONTAX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

// Status codes returned by every fallible call. Zero is success.
enum ctax_status {
    CTAX_OK = 0,
    CTAX_INVALID_ARGUMENT = 1,
    CTAX_OUT_OF_RANGE,
    CTAX_IO,
    CTAX_PARSE,
    CTAX_MISSING_COLUMN,
    CTAX_GRID_MISMATCH,
    CTAX_NO_INTERIOR_SOLUTION,
    CTAX_NON_CONCAVE,
    CTAX_MULTIPLE_OPTIMA,
    CTAX_NON_MONOTONE,
    CTAX_STEP_TOO_LARGE,
    CTAX_NO_CONVERGENCE,
    CTAX_SINGULAR_DENOMINATOR,
    CTAX_DEGENERATE_HAZARD,
    CTAX_RATE_OUT_OF_RANGE,
    CTAX_NEGATIVE_VARIANCE,
    CTAX_RANK_DEFICIENT,
    CTAX_NON_MONOTONE_AFTER_TAX,
    CTAX_INSUFFICIENT_SUPPORT,
    CTAX_SPARSE_DECILE,
    CTAX_SOLVER_FAILURE,
    CTAX_INTERNAL = 100
};

typedef struct ctax_profile ctax_profile;
typedef struct ctax_solution ctax_solution;
typedef struct ctax_economy ctax_economy;

// Message of the last failure on the calling thread; empty after a success.
CARBONTAX_API const char* ctax_last_error(void);
CARBONTAX_API const char* ctax_status_name(int status);

// Marginal damage per dollar: scc [$/t] * kg_per_dollar / 1000 / lambda_norm.
CARBONTAX_API int ctax_pigouvian_rate(double scc_usd_per_ton, double kg_per_dollar, double lambda_norm, double* out);

// Scenario constants by name ("benchmark", "high-eti", ..., or "custom:EZ,EX").
CARBONTAX_API int ctax_scenario_lookup(const char* name, double* eps_z, double* eps_x);
CARBONTAX_API size_t ctax_scenario_count(void);
CARBONTAX_API const char* ctax_scenario_name(size_t index);

// Writes cross_section.csv, survey.csv and calibration.json of the bundled synthetic calibration.
CARBONTAX_API int ctax_generate_bundled(uint64_t seed, const char* out_dir);

// Runs the estimation pipeline described by a calibration config. A non-null scenario overrides the config's.
CARBONTAX_API int ctax_calibrate(const char* config_path, const char* scenario, ctax_profile** out);
// Damage rate of a calibration config: explicit damage, else its Pigouvian rate, else 0.40.
CARBONTAX_API int ctax_config_damage(const char* config_path, double* out);

CARBONTAX_API int ctax_profile_load(const char* path, ctax_profile** out);
CARBONTAX_API int ctax_profile_save(const ctax_profile* profile, const char* path);
CARBONTAX_API void ctax_profile_free(ctax_profile* profile);
CARBONTAX_API size_t ctax_profile_size(const ctax_profile* profile);
// Copies a named column (z, h_z, xhat, xhat_slope, x_inc, x_het, eta_taste, eps_z, eps_x, mtr,
// var_x_inc, gbar_plus) into buf, which must hold ctax_profile_size values.
CARBONTAX_API int ctax_profile_column(const ctax_profile* profile, const char* name, double* buf, size_t len);
// New profile with the scenario's constant elasticities.
CARBONTAX_API int ctax_profile_with_scenario(const ctax_profile* profile, const char* scenario, ctax_profile** out);
// Pipeline warnings attached to a calibrated profile.
CARBONTAX_API size_t ctax_profile_warning_count(const ctax_profile* profile);
CARBONTAX_API const char* ctax_profile_warning(const ctax_profile* profile, size_t index);

CARBONTAX_API int ctax_economy_load(const char* path, ctax_economy** out);
CARBONTAX_API void ctax_economy_free(ctax_economy* economy);
CARBONTAX_API int ctax_economy_damage(const ctax_economy* economy, double* out);
// Statistics of the economy at its installed taxes, one grid point per productivity level.
CARBONTAX_API int ctax_economy_profile(const ctax_economy* economy, ctax_profile** out);

// method: nonlinear, levels, linear, multidim or multidim-pointwise.
CARBONTAX_API int ctax_solve(const ctax_profile* profile, const char* method, double damage, ctax_solution** out);
CARBONTAX_API void ctax_solution_free(ctax_solution* solution);
CARBONTAX_API int ctax_solution_is_scalar(const ctax_solution* solution);
CARBONTAX_API int ctax_solution_scalar_rate(const ctax_solution* solution, double* out);
CARBONTAX_API size_t ctax_solution_size(const ctax_solution* solution);
// z and rate columns of a schedule solution; either pointer may be null.
CARBONTAX_API int ctax_solution_schedule(const ctax_solution* solution, double* z, double* rate, size_t len);
// Writes the solution JSON and its CSV mirror; either path may be null.
CARBONTAX_API int ctax_solution_write(const ctax_solution* solution, const char* json_path, const char* csv_path);
// One-line summary: method, damage, result, residual, iterations. Truncated to len - 1 characters.
CARBONTAX_API int ctax_solution_summary(const ctax_solution* solution, char* buf, size_t len);

// Runs the oracle suite at the economy's installed taxes and writes the report JSON when
// report_path is non-null. *passed is 1 when every check passes. The summary buffer receives
// the names of failing checks.
CARBONTAX_API int ctax_verify(const ctax_economy* economy, double damage, const char* report_path, int* passed,
                              char* summary, size_t summary_len);

// Writes decomposition.csv, taste_elasticity.csv, schedules_by_scenario.csv and
// unidim_vs_multidim.csv into out_dir.
CARBONTAX_API int ctax_emit_plots(const ctax_profile* profile, double damage, const char* out_dir);

#ifdef __cplusplus
}
#endif
