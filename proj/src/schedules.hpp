#pragma once

#include <utility>
#include <vector>

#include "numerics.hpp"

namespace ctax {

class IncomeGrid {
public:
    IncomeGrid() = default;
    // cdf is the cumulative trapezoid integral of density
    IncomeGrid(std::vector<double> points, std::vector<double> density);
    IncomeGrid(std::vector<double> points, std::vector<double> density, std::vector<double> cdf);

    // rescales density so it integrates to one
    static IncomeGrid normalized(std::vector<double> points, std::vector<double> density);
    // density chosen so trapezoid weights reproduce the given probability masses
    static IncomeGrid from_masses(std::vector<double> points, const std::vector<double>& masses);

    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& density() const { return density_; }
    const std::vector<double>& cdf() const { return cdf_; }
    std::size_t size() const { return points_.size(); }
    // quadrature weights h(z_i) * w_i for density-weighted expectations
    std::vector<double> expectation_weights() const;
    double expectation(const std::vector<double>& f) const;
    bool same_points(const IncomeGrid& other) const;

private:
    void validate() const;
    std::vector<double> points_, density_, cdf_;
};

class IncomeTaxSchedule {
public:
    IncomeTaxSchedule() = default;
    explicit IncomeTaxSchedule(std::vector<std::pair<double, double>> knots);
    static IncomeTaxSchedule linear(double intercept, double rate, double z_lo, double z_hi);

    // (liability, marginal rate); OutOfRange outside the knot span
    std::pair<double, double> eval(double z) const;
    double liability(double z) const { return interp_.value(z); }
    double marginal_rate(double z) const { return interp_.derivative(z); }
    double curvature(double z) const { return interp_.second_derivative(z); }
    double lower() const { return interp_.lower(); }
    double upper() const { return interp_.upper(); }
    std::vector<std::pair<double, double>> knots() const;

private:
    MonotoneCubic interp_;
};

class CommodityTax {
public:
    enum class Kind { Linear, Levels, Rates };

    CommodityTax() = default;
    static CommodityTax linear(double rate);
    // knots of (x, T_x(x)), monotone cubic interpolant
    static CommodityTax from_levels(std::vector<std::pair<double, double>> knots);
    // knots of (x, T'_x(x)), natural cubic spline of the rate; T_x(first knot) = offset
    static CommodityTax from_rates(std::vector<std::pair<double, double>> knots, double offset = 0.0);

    std::pair<double, double> eval(double x) const;
    double liability(double x) const;
    double marginal_rate(double x) const;
    double curvature(double x) const;

    Kind kind() const { return kind_; }
    bool is_linear() const { return kind_ == Kind::Linear; }
    double rate() const { return rate_; }
    double offset() const { return offset_; }
    double lower() const;
    double upper() const;
    std::vector<std::pair<double, double>> knots() const;

private:
    void validate_rates() const;
    Kind kind_ = Kind::Linear;
    double rate_ = 0.0;
    double offset_ = 0.0;
    MonotoneCubic levels_;
    CubicSpline rates_;
};

struct TaxSystem {
    IncomeTaxSchedule income;
    CommodityTax commodity;
};

struct DamageCalibration {
    double scc_usd_per_ton = 0.0;
    double kg_per_dollar = 0.0;
    double lambda_norm = 1.0;
    void validate() const;
};

double pigouvian_rate(const DamageCalibration& cal);

}  // namespace ctax
