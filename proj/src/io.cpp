#include "io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "error.hpp"

namespace ctax {

namespace fs = std::filesystem;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "' for reading");
    std::ostringstream os;
    os << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::Io, "read failed for '" + path + "'");
    return os.str();
}

void write_text(const std::string& path, const std::string& content) {
    fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::Io, "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::Io, "cannot move output into place at '" + path + "'");
    }
}

double parse_number(std::string_view field, const std::string& context) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto [ptr, err] = std::from_chars(b, e, v, std::chars_format::general);
    if (field.empty() || err != std::errc() || ptr != e || !std::isfinite(v))
        throw Error(ErrorCode::Parse, context + ": '" + std::string(field) + "' is not a finite number");
    return v;
}

long parse_integer(std::string_view field, const std::string& context) {
    long v = 0;
    const char* b = field.data();
    const char* e = b + field.size();
    auto [ptr, err] = std::from_chars(b, e, v);
    if (field.empty() || err != std::errc() || ptr != e)
        throw Error(ErrorCode::Parse, context + ": '" + std::string(field) + "' is not an integer");
    return v;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, err] = std::to_chars(buf, buf + sizeof buf, v);
    if (err != std::errc()) throw Error(ErrorCode::InvalidArgument, "format_number: conversion failed");
    return std::string(buf, ptr);
}

namespace {

using Row = std::vector<std::string>;

// Splits one record; double quotes may wrap a field, with "" for a literal quote.
Row split_record(std::string_view line, std::size_t line_no) {
    Row out;
    std::string cur;
    bool quoted = false, was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            if (!cur.empty() || was_quoted)
                throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": stray quote");
            quoted = was_quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
            was_quoted = false;
        } else {
            if (was_quoted) throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": text after closing quote");
            cur += ch;
        }
    }
    if (quoted) throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(cur));
    return out;
}

struct Table {
    std::map<std::string, std::size_t> column;
    std::vector<std::pair<std::size_t, Row>> rows;  // (line number, fields)
};

Table parse_table(std::string_view text, const std::vector<std::string>& required,
                  const std::vector<std::string>& optional, const std::string& what) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    Table t;
    std::size_t line_no = 0, pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        Row r = split_record(line, line_no);
        if (header) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                const std::string& name = r[i];
                bool known = std::find(required.begin(), required.end(), name) != required.end() ||
                             std::find(optional.begin(), optional.end(), name) != optional.end();
                if (!known) throw Error(ErrorCode::Parse, what + ": unknown column '" + name + "'");
                if (!t.column.emplace(name, i).second)
                    throw Error(ErrorCode::Parse, what + ": duplicate column '" + name + "'");
            }
            for (const auto& name : required)
                if (!t.column.count(name)) throw Error(ErrorCode::MissingColumn, what + ": missing column '" + name + "'");
            header = false;
            continue;
        }
        if (r.size() != t.column.size())
            throw Error(ErrorCode::Parse, what + " line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(t.column.size()) + " fields, found " +
                                              std::to_string(r.size()));
        t.rows.emplace_back(line_no, std::move(r));
    }
    if (header) throw Error(ErrorCode::Parse, what + ": missing header row");
    return t;
}

std::string where(const std::string& what, std::size_t line, const std::string& col) {
    return what + " line " + std::to_string(line) + " column " + col;
}

}  // namespace

BinnedCrossSection parse_cross_section(std::string_view text) {
    const std::string what = "cross_section.csv";
    Table t = parse_table(text, {"percentile", "mean_income", "mean_after_tax_income", "dirty_share"},
                          {"mean_x_level"}, what);
    BinnedCrossSection cs;
    for (const auto& [line, r] : t.rows) {
        CrossSectionRow row;
        long p = parse_integer(r[t.column.at("percentile")], where(what, line, "percentile"));
        if (p < 1 || p > 100) throw Error(ErrorCode::Parse, where(what, line, "percentile") + ": outside 1..100");
        row.percentile = static_cast<int>(p);
        row.mean_income = parse_number(r[t.column.at("mean_income")], where(what, line, "mean_income"));
        row.mean_after_tax_income =
            parse_number(r[t.column.at("mean_after_tax_income")], where(what, line, "mean_after_tax_income"));
        row.dirty_share = parse_number(r[t.column.at("dirty_share")], where(what, line, "dirty_share"));
        if (auto it = t.column.find("mean_x_level"); it != t.column.end() && !r[it->second].empty())
            row.mean_x_level = parse_number(r[it->second], where(what, line, "mean_x_level"));
        cs.rows.push_back(row);
    }
    cs.validate();
    return cs;
}

SurveyMpcTable parse_survey(std::string_view text) {
    const std::string what = "survey_mpc.csv";
    Table t = parse_table(text, {"id", "taxable_income", "mpc_dirty_share", "total_mpc"}, {}, what);
    SurveyMpcTable s;
    for (const auto& [line, r] : t.rows) {
        SurveyRow row;
        row.id = r[t.column.at("id")];
        if (row.id.empty()) throw Error(ErrorCode::Parse, where(what, line, "id") + ": empty");
        row.taxable_income = parse_number(r[t.column.at("taxable_income")], where(what, line, "taxable_income"));
        row.mpc_dirty_share = parse_number(r[t.column.at("mpc_dirty_share")], where(what, line, "mpc_dirty_share"));
        row.total_mpc = parse_number(r[t.column.at("total_mpc")], where(what, line, "total_mpc"));
        s.rows.push_back(std::move(row));
    }
    s.validate();
    return s;
}

BinnedCrossSection read_cross_section(const std::string& path) { return parse_cross_section(read_text(path)); }
SurveyMpcTable read_survey(const std::string& path) { return parse_survey(read_text(path)); }

std::string format_cross_section(const BinnedCrossSection& cs) {
    bool levels = false;
    for (const auto& r : cs.rows) levels = levels || r.mean_x_level.has_value();
    std::string out = "percentile,mean_income,mean_after_tax_income,dirty_share";
    out += levels ? ",mean_x_level\n" : "\n";
    for (const auto& r : cs.rows) {
        out += std::to_string(r.percentile) + "," + format_number(r.mean_income) + "," +
               format_number(r.mean_after_tax_income) + "," + format_number(r.dirty_share);
        if (levels) out += "," + (r.mean_x_level ? format_number(*r.mean_x_level) : std::string());
        out += "\n";
    }
    return out;
}

std::string format_survey(const SurveyMpcTable& table) {
    std::string out = "id,taxable_income,mpc_dirty_share,total_mpc\n";
    for (const auto& r : table.rows) {
        std::string id = r.id;
        if (id.find_first_of(",\"") != std::string::npos) {
            std::string q = "\"";
            for (char ch : id) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
            id = q + "\"";
        }
        out += id + "," + format_number(r.taxable_income) + "," + format_number(r.mpc_dirty_share) + "," +
               format_number(r.total_mpc) + "\n";
    }
    return out;
}

namespace {

std::vector<double> column(const Json& j, const char* key, std::size_t n) {
    if (!j.contains(key)) throw Error(ErrorCode::MissingColumn, std::string("profile: missing key '") + key + "'");
    const Json& c = j.at(key);
    if (!c.is_array()) throw Error(ErrorCode::Parse, std::string("profile: '") + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : c) {
        if (!v.is_number()) throw Error(ErrorCode::Parse, std::string("profile: '") + key + "' holds a non-number");
        out.push_back(v.get<double>());
    }
    if (n != static_cast<std::size_t>(-1) && out.size() != n)
        throw Error(ErrorCode::GridMismatch, std::string("profile: '") + key + "' length differs from z");
    return out;
}

std::optional<std::vector<double>> optional_column(const Json& j, const char* key, std::size_t n) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return column(j, key, n);
}

double number(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw Error(ErrorCode::Parse, std::string("economy: '") + key + "' must be a number");
    return j.at(key).get<double>();
}

double required_number(const Json& j, const char* key, const std::string& ctx) {
    if (!j.contains(key)) throw Error(ErrorCode::Parse, ctx + ": missing '" + key + "'");
    if (!j.at(key).is_number()) throw Error(ErrorCode::Parse, ctx + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

std::vector<double> numbers(const Json& j, const std::string& ctx) {
    if (!j.is_array()) throw Error(ErrorCode::Parse, ctx + " must be an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw Error(ErrorCode::Parse, ctx + " holds a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

std::vector<std::pair<double, double>> pairs(const Json& j, const std::string& ctx) {
    if (!j.is_array()) throw Error(ErrorCode::Parse, ctx + " must be an array of pairs");
    std::vector<std::pair<double, double>> out;
    for (const auto& p : j) {
        std::vector<double> v = numbers(p, ctx);
        if (v.size() != 2) throw Error(ErrorCode::Parse, ctx + " entries must be [a, b] pairs");
        out.emplace_back(v[0], v[1]);
    }
    return out;
}

Json pairs_json(const std::vector<std::pair<double, double>>& v) {
    Json out = Json::array();
    for (const auto& [a, b] : v) out.push_back({a, b});
    return out;
}

DamageCalibration damage_calibration(const Json& c, const std::string& ctx) {
    if (!c.is_object()) throw Error(ErrorCode::Parse, ctx + " must be an object");
    DamageCalibration cal;
    cal.scc_usd_per_ton = required_number(c, "scc_usd_per_ton", ctx);
    cal.kg_per_dollar = required_number(c, "kg_per_dollar", ctx);
    cal.lambda_norm = number(c, "lambda_norm", 1.0);
    cal.validate();
    return cal;
}

Json damage_calibration_json(const DamageCalibration& cal) {
    return {{"scc_usd_per_ton", cal.scc_usd_per_ton}, {"kg_per_dollar", cal.kg_per_dollar}, {"lambda_norm", cal.lambda_norm}};
}

Json parse_json_file(const std::string& path, const std::string& what) {
    std::string text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, what + " '" + path + "': " + e.what());
    }
}

}  // namespace

Json profile_to_json(const StatsProfile& p) {
    p.validate();
    Json j;
    j["z"] = p.z();
    j["h_z"] = p.grid.density();
    j["xhat"] = p.xhat;
    j["xhat_slope"] = p.xhat_slope;
    j["x_inc"] = p.x_inc;
    j["x_het"] = p.x_het;
    j["eta_taste"] = p.eta_taste;
    j["eps_z"] = p.eps_z;
    j["eps_x"] = p.eps_x;
    j["mtr"] = p.mtr;
    j["var_x_inc"] = p.var_x_inc ? Json(*p.var_x_inc) : Json(nullptr);
    j["gbar_plus"] = p.gbar_plus ? Json(*p.gbar_plus) : Json(nullptr);
    return j;
}

StatsProfile profile_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "profile: top level must be an object");
    std::vector<double> z = column(j, "z", static_cast<std::size_t>(-1));
    const std::size_t n = z.size();
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "profile: need at least two grid points");
    StatsProfile p;
    p.grid = IncomeGrid(z, column(j, "h_z", n));
    p.xhat = column(j, "xhat", n);
    p.xhat_slope = column(j, "xhat_slope", n);
    p.x_inc = column(j, "x_inc", n);
    p.x_het = column(j, "x_het", n);
    p.eta_taste = column(j, "eta_taste", n);
    p.eps_z = column(j, "eps_z", n);
    p.eps_x = column(j, "eps_x", n);
    p.mtr = column(j, "mtr", n);
    p.var_x_inc = optional_column(j, "var_x_inc", n);
    p.gbar_plus = optional_column(j, "gbar_plus", n);
    p.validate();
    // stored identities must agree with the recomputed ones
    Decomposition d = decompose(p.z(), p.xhat, p.xhat_slope, p.x_inc);
    for (std::size_t i = 0; i < n; ++i) {
        double tol = 1e-9 * std::max(1.0, std::fabs(d.eta_taste[i]));
        if (std::fabs(d.x_het[i] - p.x_het[i]) > 1e-12 * std::max(1.0, std::fabs(p.xhat_slope[i])) ||
            std::fabs(d.eta_taste[i] - p.eta_taste[i]) > tol)
            throw Error(ErrorCode::InvalidArgument, "profile: x_het or eta_taste violates the decomposition identity");
    }
    return p;
}

StatsProfile read_profile(const std::string& path) {
    Json j = parse_json_file(path, "profile");
    try {
        return profile_from_json(j);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, "profile '" + path + "': " + e.what());
    }
}

void write_profile(const std::string& path, const StatsProfile& p) { write_text(path, profile_to_json(p).dump() + "\n"); }

double EconomyConfig::resolved_damage() const {
    if (damage) return *damage;
    if (calibration) return pigouvian_rate(*calibration);
    return 0.40;
}

EconomyConfig economy_from_json(const Json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "economy: top level must be an object");
    EconomyConfig cfg;
    SyntheticEconomy& ec = cfg.economy;
    UtilityParams& u = ec.utility;
    std::string family = j.value("family", std::string("separable-homogeneous"));
    if (family == "separable-homogeneous") u.family = UtilityFamily::SeparableHomogeneous;
    else if (family == "taste-shifted") u.family = UtilityFamily::TasteShifted;
    else throw Error(ErrorCode::Parse, "economy: unknown family '" + family + "'");
    u.labor_elasticity = number(j, "labor_elasticity", u.labor_elasticity);
    u.alpha0 = number(j, "alpha0", u.alpha0);
    u.gamma = number(j, "gamma", u.gamma);
    u.gamma2 = number(j, "gamma2", u.gamma2);
    u.w_ref = number(j, "w_ref", u.w_ref);
    u.sigma_x = number(j, "sigma_x", u.sigma_x);

    if (!j.contains("productivity")) throw Error(ErrorCode::Parse, "economy: missing 'productivity'");
    const Json& pr = j.at("productivity");
    if (pr.contains("values")) {
        ec.w_values = numbers(pr.at("values"), "economy: productivity.values");
        if (pr.contains("weights")) ec.w_weights = numbers(pr.at("weights"), "economy: productivity.weights");
        else ec.w_weights.assign(ec.w_values.size(), 1.0 / static_cast<double>(ec.w_values.size()));
    } else {
        double lo = required_number(pr, "lo", "economy: productivity");
        double hi = required_number(pr, "hi", "economy: productivity");
        double count = required_number(pr, "count", "economy: productivity");
        if (!(count >= 2.0) || count != std::floor(count)) throw Error(ErrorCode::Parse, "economy: productivity.count must be an integer >= 2");
        if (!(lo > 0.0 && hi > lo)) throw Error(ErrorCode::Parse, "economy: productivity bounds");
        std::size_t n = static_cast<std::size_t>(count);
        ec.w_values = log_grid(lo, hi, n);
        ec.w_weights.assign(n, 1.0 / static_cast<double>(n));
    }
    if (j.contains("theta")) {
        const Json& th = j.at("theta");
        ec.theta_values = numbers(th.at("values"), "economy: theta.values");
        ec.theta_weights = numbers(th.at("weights"), "economy: theta.weights");
    }

    if (!j.contains("income_tax")) throw Error(ErrorCode::Parse, "economy: missing 'income_tax'");
    const Json& it = j.at("income_tax");
    if (it.contains("knots")) {
        ec.tax.income = IncomeTaxSchedule(pairs(it.at("knots"), "economy: income_tax.knots"));
    } else {
        ec.tax.income = IncomeTaxSchedule::linear(required_number(it, "intercept", "economy: income_tax"),
                                                  required_number(it, "rate", "economy: income_tax"),
                                                  number(it, "lo", 1.0), number(it, "hi", 1e8));
    }
    if (!j.contains("commodity_tax")) throw Error(ErrorCode::Parse, "economy: missing 'commodity_tax'");
    const Json& ct = j.at("commodity_tax");
    if (ct.contains("rate")) ec.tax.commodity = CommodityTax::linear(required_number(ct, "rate", "economy: commodity_tax"));
    else if (ct.contains("levels")) ec.tax.commodity = CommodityTax::from_levels(pairs(ct.at("levels"), "economy: commodity_tax.levels"));
    else if (ct.contains("rates"))
        ec.tax.commodity = CommodityTax::from_rates(pairs(ct.at("rates"), "economy: commodity_tax.rates"), number(ct, "offset", 0.0));
    else throw Error(ErrorCode::Parse, "economy: commodity_tax needs 'rate', 'levels' or 'rates'");

    if (j.contains("damage")) cfg.damage = required_number(j, "damage", "economy");
    if (j.contains("calibration")) cfg.calibration = damage_calibration(j.at("calibration"), "economy: calibration");
    ec.validate();
    return cfg;
}

Json economy_to_json(const EconomyConfig& cfg) {
    const SyntheticEconomy& ec = cfg.economy;
    const UtilityParams& u = ec.utility;
    Json j;
    j["family"] = u.family == UtilityFamily::TasteShifted ? "taste-shifted" : "separable-homogeneous";
    j["labor_elasticity"] = u.labor_elasticity;
    j["alpha0"] = u.alpha0;
    j["gamma"] = u.gamma;
    j["gamma2"] = u.gamma2;
    j["w_ref"] = u.w_ref;
    j["sigma_x"] = u.sigma_x;
    j["productivity"] = {{"values", ec.w_values}, {"weights", ec.w_weights}};
    if (!ec.theta_values.empty()) j["theta"] = {{"values", ec.theta_values}, {"weights", ec.theta_weights}};
    j["income_tax"] = {{"knots", pairs_json(ec.tax.income.knots())}};
    const CommodityTax& c = ec.tax.commodity;
    if (c.is_linear()) j["commodity_tax"] = {{"rate", c.rate()}};
    else if (c.kind() == CommodityTax::Kind::Levels) j["commodity_tax"] = {{"levels", pairs_json(c.knots())}};
    else j["commodity_tax"] = {{"rates", pairs_json(c.knots())}, {"offset", c.offset()}};
    if (cfg.damage) j["damage"] = *cfg.damage;
    if (cfg.calibration) j["calibration"] = damage_calibration_json(*cfg.calibration);
    return j;
}

EconomyConfig read_economy(const std::string& path) {
    Json j = parse_json_file(path, "economy");
    try {
        return economy_from_json(j);
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, "economy '" + path + "': " + e.what());
    }
}

double CalibrationConfig::resolved_damage() const {
    if (damage) return *damage;
    if (calibration) return pigouvian_rate(*calibration);
    return 0.40;
}

CalibrationConfig calibration_config_from_json(const Json& j, const std::string& base_dir) {
    if (!j.is_object()) throw Error(ErrorCode::Parse, "calibration config: top level must be an object");
    auto path_of = [&](const char* key) {
        if (!j.contains(key) || !j.at(key).is_string())
            throw Error(ErrorCode::Parse, std::string("calibration config: '") + key + "' must be a path string");
        fs::path p(j.at(key).get<std::string>());
        return (p.is_relative() && !base_dir.empty() ? fs::path(base_dir) / p : p).string();
    };
    CalibrationConfig cfg;
    cfg.cross_section = path_of("cross_section");
    cfg.survey = path_of("survey");
    if (j.contains("scenario")) {
        if (!j.at("scenario").is_string()) throw Error(ErrorCode::Parse, "calibration config: 'scenario' must be a string");
        cfg.scenario = j.at("scenario").get<std::string>();
    }
    find_scenario(cfg.scenario);
    if (j.contains("damage")) cfg.damage = required_number(j, "damage", "calibration config");
    if (j.contains("calibration")) cfg.calibration = damage_calibration(j.at("calibration"), "calibration config: calibration");
    if (j.contains("smoothing")) {
        const Json& s = j.at("smoothing");
        if (!s.is_object()) throw Error(ErrorCode::Parse, "calibration config: 'smoothing' must be an object");
        SmoothingConfig& sc = cfg.smoothing;
        sc.grid_size = static_cast<std::size_t>(number(s, "grid_size", static_cast<double>(sc.grid_size)));
        sc.log_spaced = s.value("log_spaced", sc.log_spaced);
        if (s.contains("spline_penalty") && !s.at("spline_penalty").is_null())
            sc.spline_penalty = required_number(s, "spline_penalty", "calibration config: smoothing");
        sc.poly_degree_mpc = static_cast<int>(number(s, "poly_degree_mpc", sc.poly_degree_mpc));
        sc.grid_floor = number(s, "grid_floor", sc.grid_floor);
        sc.grid_cap = number(s, "grid_cap", sc.grid_cap);
        sc.mtr_lower = number(s, "mtr_lower", sc.mtr_lower);
        sc.mtr_upper = number(s, "mtr_upper", sc.mtr_upper);
        sc.variance_bandwidth = number(s, "variance_bandwidth", sc.variance_bandwidth);
        sc.validate();
    }
    return cfg;
}

Json calibration_config_to_json(const CalibrationConfig& cfg) {
    Json j;
    j["cross_section"] = cfg.cross_section;
    j["survey"] = cfg.survey;
    j["scenario"] = cfg.scenario;
    if (cfg.damage) j["damage"] = *cfg.damage;
    if (cfg.calibration) j["calibration"] = damage_calibration_json(*cfg.calibration);
    const SmoothingConfig& sc = cfg.smoothing;
    j["smoothing"] = {{"grid_size", sc.grid_size},
                      {"log_spaced", sc.log_spaced},
                      {"spline_penalty", sc.spline_penalty ? Json(*sc.spline_penalty) : Json(nullptr)},
                      {"poly_degree_mpc", sc.poly_degree_mpc},
                      {"grid_floor", sc.grid_floor},
                      {"grid_cap", sc.grid_cap},
                      {"mtr_lower", sc.mtr_lower},
                      {"mtr_upper", sc.mtr_upper},
                      {"variance_bandwidth", sc.variance_bandwidth}};
    return j;
}

CalibrationConfig read_calibration_config(const std::string& path) {
    Json j = parse_json_file(path, "calibration config");
    try {
        return calibration_config_from_json(j, fs::path(path).parent_path().string());
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::Parse, "calibration config '" + path + "': " + e.what());
    }
}

Json solution_to_json(const Solution& s) {
    Json j;
    j["method"] = method_name(s.method);
    j["damage"] = s.damage;
    if (s.is_scalar()) {
        j["rate"] = s.scalar_rate;
        j["closed_form"] = s.scalar_closed_form;
    } else {
        Json sched = Json::array();
        for (std::size_t i = 0; i < s.z.size(); ++i) sched.push_back({s.z[i], s.rate[i]});
        j["schedule"] = sched;
        if (!s.income_rate.empty()) {
            Json inc = Json::array();
            for (std::size_t i = 0; i < s.z.size(); ++i) inc.push_back({s.z[i], s.income_rate[i]});
            j["income_schedule"] = inc;
        }
    }
    j["report"] = {{"converged", s.report.converged},
                   {"iterations", s.report.iterations},
                   {"residual", s.report.residual},
                   {"branch_note", s.report.branch_note}};
    return j;
}

std::string solution_to_csv(const Solution& s) {
    if (s.is_scalar())
        return std::string("method,damage,rate\n") + method_name(s.method) + "," + format_number(s.damage) + "," +
               format_number(s.scalar_rate) + "\n";
    std::string out = s.income_rate.empty() ? "z,rate\n" : "z,rate,income_rate\n";
    for (std::size_t i = 0; i < s.z.size(); ++i) {
        out += format_number(s.z[i]) + "," + format_number(s.rate[i]);
        if (!s.income_rate.empty()) out += "," + format_number(s.income_rate[i]);
        out += "\n";
    }
    return out;
}

Json verify_report_to_json(const VerifyReport& report) {
    Json checks = Json::array();
    for (const VerifyCheck& c : report.checks)
        checks.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}, {"detail", c.detail}});
    return {{"damage", report.damage}, {"passed", report.passed()}, {"checks", checks}};
}

}  // namespace ctax
