#include <carbontax/carbontax.h>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace {

namespace fs = std::filesystem;

constexpr int kExitCheckFailed = 1;
constexpr int kExitError = 2;

struct Failure {
    int status;
    std::string message;
};

void check(int status) {
    if (status != CTAX_OK) throw Failure{status, ctax_last_error()};
}

void fail(const std::string& message) { throw Failure{CTAX_INVALID_ARGUMENT, std::string("InvalidArgument: ") + message}; }

struct ProfileDeleter {
    void operator()(ctax_profile* p) const { ctax_profile_free(p); }
};
struct SolutionDeleter {
    void operator()(ctax_solution* s) const { ctax_solution_free(s); }
};
struct EconomyDeleter {
    void operator()(ctax_economy* e) const { ctax_economy_free(e); }
};
using ProfilePtr = std::unique_ptr<ctax_profile, ProfileDeleter>;
using SolutionPtr = std::unique_ptr<ctax_solution, SolutionDeleter>;
using EconomyPtr = std::unique_ptr<ctax_economy, EconomyDeleter>;

struct Options {
    std::string config, profile, economy, out = ".", method = "nonlinear", scenario;
    std::optional<double> damage;
    std::uint64_t seed = 20240601;
};

std::string in_dir(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) fail(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) throw Failure{CTAX_IO, "Io: cannot open '" + path + "' for reading"};
}

void make_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{CTAX_IO, "Io: cannot create directory '" + dir + "'"};
}

ProfilePtr load_profile(const std::string& path) {
    require_file(path, "--profile");
    ctax_profile* p = nullptr;
    check(ctax_profile_load(path.c_str(), &p));
    return ProfilePtr(p);
}

ProfilePtr apply_scenario(ProfilePtr p, const std::string& scenario) {
    if (scenario.empty()) return p;
    ctax_profile* q = nullptr;
    check(ctax_profile_with_scenario(p.get(), scenario.c_str(), &q));
    return ProfilePtr(q);
}

// --damage wins, then the calibration config, then 0.40
double resolve_damage(const Options& o) {
    if (o.damage) {
        if (!std::isfinite(*o.damage) || *o.damage < 0.0) fail("--damage must be a finite non-negative rate");
        return *o.damage;
    }
    if (!o.config.empty()) {
        require_file(o.config, "--config");
        double d = 0.0;
        check(ctax_config_damage(o.config.c_str(), &d));
        return d;
    }
    return 0.40;
}

int cmd_calibrate(const Options& o) {
    check(ctax_generate_bundled(o.seed, o.out.c_str()));
    std::printf("calibrate seed=%llu out=%s\n", static_cast<unsigned long long>(o.seed), o.out.c_str());
    return 0;
}

int cmd_stats(const Options& o) {
    if (o.config.empty() == o.economy.empty()) fail("stats needs exactly one of --config or --economy");
    ProfilePtr p;
    if (!o.config.empty()) {
        require_file(o.config, "--config");
        ctax_profile* raw = nullptr;
        check(ctax_calibrate(o.config.c_str(), o.scenario.empty() ? nullptr : o.scenario.c_str(), &raw));
        p = ProfilePtr(raw);
    } else {
        require_file(o.economy, "--economy");
        ctax_economy* e = nullptr;
        check(ctax_economy_load(o.economy.c_str(), &e));
        EconomyPtr economy(e);
        ctax_profile* raw = nullptr;
        check(ctax_economy_profile(economy.get(), &raw));
        p = apply_scenario(ProfilePtr(raw), o.scenario);
    }
    for (size_t i = 0; i < ctax_profile_warning_count(p.get()); ++i)
        std::fprintf(stderr, "warning: %s\n", ctax_profile_warning(p.get(), i));
    make_out_dir(o.out);
    std::string path = in_dir(o.out, "profile.json");
    check(ctax_profile_save(p.get(), path.c_str()));
    std::printf("stats points=%zu warnings=%zu out=%s\n", ctax_profile_size(p.get()),
                ctax_profile_warning_count(p.get()), path.c_str());
    return 0;
}

int cmd_solve(const Options& o) {
    ProfilePtr p = apply_scenario(load_profile(o.profile), o.scenario);
    double damage = resolve_damage(o);
    ctax_solution* raw = nullptr;
    check(ctax_solve(p.get(), o.method.c_str(), damage, &raw));
    SolutionPtr s(raw);
    make_out_dir(o.out);
    check(ctax_solution_write(s.get(), in_dir(o.out, "solution.json").c_str(), in_dir(o.out, "solution.csv").c_str()));
    char line[512];
    check(ctax_solution_summary(s.get(), line, sizeof line));
    std::printf("%s\n", line);
    return 0;
}

int cmd_verify(const Options& o) {
    require_file(o.economy, "--economy");
    ctax_economy* raw = nullptr;
    check(ctax_economy_load(o.economy.c_str(), &raw));
    EconomyPtr e(raw);
    double damage = 0.0;
    if (o.damage) damage = resolve_damage(o);
    else check(ctax_economy_damage(e.get(), &damage));
    make_out_dir(o.out);
    int passed = 0;
    char failing[512];
    check(ctax_verify(e.get(), damage, in_dir(o.out, "verify_report.json").c_str(), &passed, failing, sizeof failing));
    if (!passed) {
        std::fprintf(stderr, "verify: failing checks: %s\n", failing);
        std::printf("verify passed=false failing=%s\n", failing);
        return kExitCheckFailed;
    }
    std::printf("verify passed=true\n");
    return 0;
}

int cmd_emit_plot(const Options& o) {
    ProfilePtr p = apply_scenario(load_profile(o.profile), o.scenario);
    double damage = resolve_damage(o);
    check(ctax_emit_plots(p.get(), damage, o.out.c_str()));
    std::printf("emit-plot points=%zu out=%s\n", ctax_profile_size(p.get()), o.out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal externality-correcting tax schedules from sufficient statistics"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) { sub->add_option("--out", o.out, "output directory")->capture_default_str(); };
    auto add_damage = [&](CLI::App* sub) { sub->add_option("--damage", o.damage, "marginal damage rate, overrides calibration"); };

    CLI::App* calibrate = app.add_subcommand("calibrate", "write the bundled synthetic calibration data");
    calibrate->add_option("--seed", o.seed, "synthetic generation seed")->capture_default_str();
    add_common(calibrate);

    CLI::App* stats = app.add_subcommand("stats", "build a statistics profile");
    stats->add_option("--config", o.config, "calibration config JSON");
    stats->add_option("--economy", o.economy, "synthetic economy JSON");
    stats->add_option("--scenario", o.scenario, "elasticity scenario");
    add_common(stats);

    CLI::App* solve = app.add_subcommand("solve", "solve for the optimal commodity tax");
    solve->add_option("--profile", o.profile, "statistics profile JSON");
    solve->add_option("--method", o.method, "nonlinear, levels, linear, multidim or multidim-pointwise")
        ->capture_default_str();
    solve->add_option("--scenario", o.scenario, "elasticity scenario replacing the profile's constants");
    solve->add_option("--config", o.config, "calibration config supplying the damage calibration");
    add_damage(solve);
    add_common(solve);

    CLI::App* verify = app.add_subcommand("verify", "run the oracle suite on a synthetic economy");
    verify->add_option("--economy", o.economy, "synthetic economy JSON");
    add_damage(verify);
    add_common(verify);

    CLI::App* plot = app.add_subcommand("emit-plot", "write tidy plot tables");
    plot->add_option("--profile", o.profile, "statistics profile JSON");
    plot->add_option("--scenario", o.scenario, "elasticity scenario replacing the profile's constants");
    plot->add_option("--config", o.config, "calibration config supplying the damage calibration");
    add_damage(plot);
    add_common(plot);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (*calibrate) return cmd_calibrate(o);
        if (*stats) return cmd_stats(o);
        if (*solve) return cmd_solve(o);
        if (*verify) return cmd_verify(o);
        if (*plot) return cmd_emit_plot(o);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return kExitError;
    }
    return kExitError;
}
