#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "error.hpp"
#include "io.hpp"
#include "synthetic.hpp"

using namespace ctax;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "carbontax_io_test";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("strict numbers") {
    CHECK(parse_number("1.5", "t") == 1.5);
    CHECK(parse_number("-2e3", "t") == -2000.0);
    for (const char* bad : {"", " 1.5", "1.5 ", "+1", "1,5", "1.5.2", "nan", "inf", "0x10", "1e999", "12abc"})
        CHECK(code_of([&] { parse_number(bad, "t"); }) == ErrorCode::Parse);
    CHECK(parse_integer("42", "t") == 42);
    CHECK(code_of([] { parse_integer("4.0", "t"); }) == ErrorCode::Parse);
}

TEST_CASE("cross-section CSV: columns, dialect and rejection") {
    std::string good =
        "\xEF\xBB\xBFpercentile,mean_income,mean_after_tax_income,dirty_share\r\n"
        "1,10000,9000,0.11\r\n"
        "2,20000,17000,0.1\r\n";
    BinnedCrossSection cs = parse_cross_section(good);
    REQUIRE(cs.rows.size() == 2);
    CHECK(cs.rows[1].mean_after_tax_income == 17000.0);
    CHECK_FALSE(cs.rows[0].mean_x_level.has_value());

    std::string reordered = "dirty_share,percentile,mean_x_level,mean_after_tax_income,mean_income\n0.1,1,900,9000,10000\n";
    BinnedCrossSection r = parse_cross_section(reordered);
    CHECK(*r.rows[0].mean_x_level == 900.0);

    CHECK(code_of([] { parse_cross_section("percentile,mean_income,dirty_share\n1,100,0.1\n"); }) == ErrorCode::MissingColumn);
    CHECK(code_of([] { parse_cross_section("percentile,mean_income,mean_after_tax_income,dirty_share,extra\n"); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] { parse_cross_section("percentile,mean_income,mean_after_tax_income,dirty_share\n1,\"10000,5\",9000,0.1\n"); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] { parse_cross_section("percentile,mean_income,mean_after_tax_income,dirty_share\n1,10000;9000;0.1\n"); }) ==
          ErrorCode::Parse);
    CHECK(code_of([] { parse_cross_section("percentile,mean_income,mean_after_tax_income,dirty_share\n1,10000,9000,1.2\n"); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { parse_cross_section(""); }) == ErrorCode::Parse);
}

TEST_CASE("survey CSV with quoted identifiers") {
    std::string text = "id,taxable_income,mpc_dirty_share,total_mpc\n\"a,\"\"1\"\"\",50000,0.05,0.9\nb,60000,0.04,1\n";
    SurveyMpcTable t = parse_survey(text);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0].id == "a,\"1\"");
    SurveyMpcTable back = parse_survey(format_survey(t));
    CHECK(back.rows[0].id == t.rows[0].id);
    CHECK(code_of([] { parse_survey("id,taxable_income,mpc_dirty_share,total_mpc\nx,50000,1.5,1\n"); }) ==
          ErrorCode::InvalidArgument);
}

TEST_CASE("calibration CSVs round trip bit for bit") {
    CalibrationData cal = bundled_calibration();
    std::string cs_text = format_cross_section(cal.cross_section);
    BinnedCrossSection cs = parse_cross_section(cs_text);
    REQUIRE(cs.rows.size() == cal.cross_section.rows.size());
    for (std::size_t i = 0; i < cs.rows.size(); ++i) {
        CHECK(cs.rows[i].mean_income == cal.cross_section.rows[i].mean_income);
        CHECK(cs.rows[i].dirty_share == cal.cross_section.rows[i].dirty_share);
        CHECK(*cs.rows[i].mean_x_level == *cal.cross_section.rows[i].mean_x_level);
    }
    CHECK(format_cross_section(cs) == cs_text);
    SurveyMpcTable s = parse_survey(format_survey(cal.survey));
    CHECK(format_survey(s) == format_survey(cal.survey));
}

TEST_CASE("profile JSON round trip and identity re-check") {
    CalibrationData cal = bundled_calibration();
    StatsProfile p = run_pipeline(cal.cross_section, cal.survey, 0.33, 0.5).profile;
    Json j = profile_to_json(p);
    CHECK(j["gbar_plus"].is_null());
    StatsProfile q = profile_from_json(Json::parse(j.dump()));
    CHECK(q.z() == p.z());
    CHECK(q.eta_taste == p.eta_taste);
    CHECK(*q.var_x_inc == *p.var_x_inc);
    CHECK(q.grid.cdf() == p.grid.cdf());

    std::string path = temp_path("profile.json");
    write_profile(path, p);
    CHECK(read_text(path) == j.dump() + "\n");

    Json broken = j;
    broken["eta_taste"][10] = broken["eta_taste"][10].get<double>() + 1e-3;
    CHECK(code_of([&] { profile_from_json(broken); }) == ErrorCode::InvalidArgument);
    Json missing = j;
    missing.erase("mtr");
    CHECK(code_of([&] { profile_from_json(missing); }) == ErrorCode::MissingColumn);
    Json shorter = j;
    shorter["xhat"].erase(0);
    CHECK(code_of([&] { profile_from_json(shorter); }) == ErrorCode::GridMismatch);
    CHECK(code_of([] { read_profile("/nonexistent/profile.json"); }) == ErrorCode::Io);
}

TEST_CASE("economy JSON") {
    Json j = Json::parse(R"({
        "family": "taste-shifted", "gamma": 0.2, "w_ref": 60000,
        "productivity": {"lo": 15000, "hi": 300000, "count": 11},
        "income_tax": {"intercept": -8000, "rate": 0.3, "lo": 100, "hi": 1e7},
        "commodity_tax": {"rate": 0.4},
        "calibration": {"scc_usd_per_ton": 200, "kg_per_dollar": 2.0}
    })");
    EconomyConfig cfg = economy_from_json(j);
    CHECK(cfg.economy.w_values.size() == 11);
    CHECK(cfg.economy.utility.family == UtilityFamily::TasteShifted);
    CHECK(cfg.resolved_damage() == 0.40);
    EconomyConfig back = economy_from_json(Json::parse(economy_to_json(cfg).dump()));
    CHECK(back.economy.w_values == cfg.economy.w_values);
    CHECK(back.economy.tax.income.liability(50000.0) == doctest::Approx(cfg.economy.tax.income.liability(50000.0)).epsilon(1e-12));
    CHECK(back.economy.tax.commodity.rate() == 0.4);

    Json bad = j;
    bad["family"] = "quadratic";
    CHECK(code_of([&] { economy_from_json(bad); }) == ErrorCode::Parse);
    Json nokey = j;
    nokey.erase("commodity_tax");
    CHECK(code_of([&] { economy_from_json(nokey); }) == ErrorCode::Parse);
    std::string path = temp_path("bad_economy.json");
    write_text(path, "{ \"family\": ");
    CHECK(code_of([&] { read_economy(path); }) == ErrorCode::Parse);
}

TEST_CASE("solution serialization") {
    Solution s;
    s.method = Method::Nonlinear;
    s.damage = 0.4;
    s.z = {10000.0, 20000.0};
    s.rate = {0.41, 0.39};
    CHECK(solution_to_csv(s) == "z,rate\n10000,0.41\n20000,0.39\n");
    Json j = solution_to_json(s);
    CHECK(j["schedule"][1][1] == 0.39);
    Solution l;
    l.method = Method::Linear;
    l.damage = 0.4;
    l.scalar_rate = 0.398;
    CHECK(solution_to_csv(l) == "method,damage,rate\nlinear,0.4,0.398\n");
    CHECK(solution_to_json(l)["rate"] == 0.398);
}

TEST_CASE("calibration config resolves paths and damage") {
    Json j = Json::parse(R"({"cross_section": "cs.csv", "survey": "/abs/survey.csv", "scenario": "low-demand",
                             "calibration": {"scc_usd_per_ton": 200, "kg_per_dollar": 2.415},
                             "smoothing": {"poly_degree_mpc": 3, "spline_penalty": 0.5}})");
    CalibrationConfig cfg = calibration_config_from_json(j, "/data/dir");
    CHECK(cfg.cross_section == "/data/dir/cs.csv");
    CHECK(cfg.survey == "/abs/survey.csv");
    CHECK(cfg.scenario == "low-demand");
    CHECK(cfg.smoothing.poly_degree_mpc == 3);
    CHECK(*cfg.smoothing.spline_penalty == 0.5);
    CHECK(cfg.resolved_damage() == doctest::Approx(0.483).epsilon(1e-15));
    cfg.damage = 0.3;
    CHECK(cfg.resolved_damage() == 0.3);
    CalibrationConfig back = calibration_config_from_json(calibration_config_to_json(cfg));
    CHECK(back.cross_section == cfg.cross_section);
    CHECK(*back.damage == 0.3);

    Json bad_scenario = j;
    bad_scenario["scenario"] = "medium";
    CHECK(code_of([&] { calibration_config_from_json(bad_scenario); }) == ErrorCode::InvalidArgument);
    Json no_survey = j;
    no_survey.erase("survey");
    CHECK(code_of([&] { calibration_config_from_json(no_survey); }) == ErrorCode::Parse);
    Json bad_degree = j;
    bad_degree["smoothing"]["poly_degree_mpc"] = 7;
    CHECK(code_of([&] { calibration_config_from_json(bad_degree); }) == ErrorCode::InvalidArgument);
}
