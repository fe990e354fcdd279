#include "schedules.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"

namespace ctax {

IncomeGrid::IncomeGrid(std::vector<double> points, std::vector<double> density)
    : points_(std::move(points)), density_(std::move(density)) {
    if (points_.size() != density_.size()) throw Error(ErrorCode::GridMismatch, "IncomeGrid: points/density sizes differ");
    cdf_ = cumulative_trapezoid(points_, density_);
    validate();
}

IncomeGrid::IncomeGrid(std::vector<double> points, std::vector<double> density, std::vector<double> cdf)
    : points_(std::move(points)), density_(std::move(density)), cdf_(std::move(cdf)) {
    if (points_.size() != density_.size() || points_.size() != cdf_.size())
        throw Error(ErrorCode::GridMismatch, "IncomeGrid: column sizes differ");
    validate();
    std::vector<double> c = cumulative_trapezoid(points_, density_);
    for (std::size_t i = 0; i < c.size(); ++i)
        if (std::fabs((cdf_[i] - cdf_[0]) - c[i]) > 1e-6)
            throw Error(ErrorCode::InvalidArgument, "IncomeGrid: cdf inconsistent with density");
}

IncomeGrid IncomeGrid::normalized(std::vector<double> points, std::vector<double> density) {
    double mass = trapezoid(points, density);
    if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "IncomeGrid: density has no mass");
    for (double& d : density) d /= mass;
    return IncomeGrid(std::move(points), std::move(density));
}

IncomeGrid IncomeGrid::from_masses(std::vector<double> points, const std::vector<double>& masses) {
    if (points.size() != masses.size() || points.size() < 2)
        throw Error(ErrorCode::GridMismatch, "IncomeGrid: masses do not match points");
    std::vector<double> w = trapezoid_weights(points);
    std::vector<double> density(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) density[i] = masses[i] / w[i];
    return IncomeGrid(std::move(points), std::move(density));
}

void IncomeGrid::validate() const {
    if (points_.size() < 2) throw Error(ErrorCode::InvalidArgument, "IncomeGrid: need at least two points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i] > 0.0) || !std::isfinite(points_[i]))
            throw Error(ErrorCode::InvalidArgument, "IncomeGrid: points must be positive");
        if (i > 0 && !(points_[i] > points_[i - 1]))
            throw Error(ErrorCode::InvalidArgument, "IncomeGrid: points not strictly increasing");
        if (!(density_[i] >= 0.0)) throw Error(ErrorCode::InvalidArgument, "IncomeGrid: negative density");
        if (i > 0 && cdf_[i] < cdf_[i - 1]) throw Error(ErrorCode::InvalidArgument, "IncomeGrid: cdf decreasing");
    }
    if (cdf_.front() < 0.0 || cdf_.back() > 1.0 + 1e-6) throw Error(ErrorCode::InvalidArgument, "IncomeGrid: cdf outside [0,1]");
    double mass = trapezoid(points_, density_);
    if (std::fabs(mass - 1.0) > 1e-6)
        throw Error(ErrorCode::InvalidArgument, "IncomeGrid: density integrates to " + std::to_string(mass));
}

std::vector<double> IncomeGrid::expectation_weights() const {
    std::vector<double> w = trapezoid_weights(points_);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] *= density_[i];
    return w;
}

double IncomeGrid::expectation(const std::vector<double>& f) const {
    if (f.size() != points_.size()) throw Error(ErrorCode::GridMismatch, "expectation: size mismatch");
    std::vector<double> w = expectation_weights();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i];
    return s;
}

bool IncomeGrid::same_points(const IncomeGrid& other) const { return points_ == other.points_; }

IncomeTaxSchedule::IncomeTaxSchedule(std::vector<std::pair<double, double>> knots) {
    std::vector<double> z, t;
    for (auto& k : knots) {
        z.push_back(k.first);
        t.push_back(k.second);
    }
    interp_ = MonotoneCubic(std::move(z), std::move(t));
    // net-of-tax rate must stay positive; check knots and segment interiors
    const auto& xs = interp_.x();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (int k = 0; k <= 8; ++k) {
            double q = xs[i] + (xs[i + 1] - xs[i]) * k / 8.0;
            if (!(interp_.derivative(q) < 1.0))
                throw Error(ErrorCode::InvalidArgument, "IncomeTaxSchedule: marginal rate >= 1 near z=" + std::to_string(q));
        }
}

IncomeTaxSchedule IncomeTaxSchedule::linear(double intercept, double rate, double z_lo, double z_hi) {
    return IncomeTaxSchedule({{z_lo, intercept + rate * z_lo}, {z_hi, intercept + rate * z_hi}});
}

std::pair<double, double> IncomeTaxSchedule::eval(double z) const { return {interp_.value(z), interp_.derivative(z)}; }

std::vector<std::pair<double, double>> IncomeTaxSchedule::knots() const {
    std::vector<std::pair<double, double>> k;
    for (std::size_t i = 0; i < interp_.x().size(); ++i) k.emplace_back(interp_.x()[i], interp_.y()[i]);
    return k;
}

CommodityTax CommodityTax::linear(double rate) {
    if (!(rate > -1.0) || !std::isfinite(rate)) throw Error(ErrorCode::InvalidArgument, "CommodityTax: linear rate must exceed -1");
    CommodityTax t;
    t.kind_ = Kind::Linear;
    t.rate_ = rate;
    return t;
}

CommodityTax CommodityTax::from_levels(std::vector<std::pair<double, double>> knots) {
    std::vector<double> x, v;
    for (auto& k : knots) {
        x.push_back(k.first);
        v.push_back(k.second);
    }
    CommodityTax t;
    t.kind_ = Kind::Levels;
    t.levels_ = MonotoneCubic(std::move(x), std::move(v));
    if (t.lower() < 0.0) throw Error(ErrorCode::InvalidArgument, "CommodityTax: negative knot abscissa");
    t.validate_rates();
    return t;
}

CommodityTax CommodityTax::from_rates(std::vector<std::pair<double, double>> knots, double offset) {
    std::vector<double> x, r;
    for (auto& k : knots) {
        x.push_back(k.first);
        r.push_back(k.second);
    }
    CommodityTax t;
    t.kind_ = Kind::Rates;
    t.offset_ = offset;
    t.rates_ = CubicSpline(std::move(x), std::move(r));
    if (t.lower() < 0.0) throw Error(ErrorCode::InvalidArgument, "CommodityTax: negative knot abscissa");
    t.validate_rates();
    return t;
}

void CommodityTax::validate_rates() const {
    const std::vector<double>& xs = kind_ == Kind::Levels ? levels_.x() : rates_.x();
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (int k = 0; k <= 8; ++k) {
            double q = xs[i] + (xs[i + 1] - xs[i]) * k / 8.0;
            if (!(1.0 + marginal_rate(q) > 0.0))
                throw Error(ErrorCode::InvalidArgument, "CommodityTax: 1 + T'_x <= 0 near x=" + std::to_string(q));
        }
}

double CommodityTax::liability(double x) const {
    switch (kind_) {
    case Kind::Linear:
        if (x < 0.0) throw Error(ErrorCode::OutOfRange, "CommodityTax: negative quantity");
        return rate_ * x;
    case Kind::Levels: return levels_.value(x);
    case Kind::Rates: return offset_ + rates_.integral(x);
    }
    return 0.0;
}

double CommodityTax::marginal_rate(double x) const {
    switch (kind_) {
    case Kind::Linear:
        if (x < 0.0) throw Error(ErrorCode::OutOfRange, "CommodityTax: negative quantity");
        return rate_;
    case Kind::Levels: return levels_.derivative(x);
    case Kind::Rates: return rates_.value(x);
    }
    return 0.0;
}

double CommodityTax::curvature(double x) const {
    switch (kind_) {
    case Kind::Linear: return 0.0;
    case Kind::Levels: return levels_.second_derivative(x);
    case Kind::Rates: return rates_.derivative(x);
    }
    return 0.0;
}

std::pair<double, double> CommodityTax::eval(double x) const { return {liability(x), marginal_rate(x)}; }

double CommodityTax::lower() const {
    switch (kind_) {
    case Kind::Linear: return 0.0;
    case Kind::Levels: return levels_.lower();
    case Kind::Rates: return rates_.lower();
    }
    return 0.0;
}

double CommodityTax::upper() const {
    switch (kind_) {
    case Kind::Linear: return std::numeric_limits<double>::infinity();
    case Kind::Levels: return levels_.upper();
    case Kind::Rates: return rates_.upper();
    }
    return 0.0;
}

std::vector<std::pair<double, double>> CommodityTax::knots() const {
    std::vector<std::pair<double, double>> k;
    if (kind_ == Kind::Levels)
        for (std::size_t i = 0; i < levels_.x().size(); ++i) k.emplace_back(levels_.x()[i], levels_.y()[i]);
    else if (kind_ == Kind::Rates)
        for (std::size_t i = 0; i < rates_.x().size(); ++i) k.emplace_back(rates_.x()[i], rates_.y()[i]);
    return k;
}

void DamageCalibration::validate() const {
    if (!(scc_usd_per_ton >= 0.0) || !(kg_per_dollar >= 0.0) || !(lambda_norm > 0.0))
        throw Error(ErrorCode::InvalidArgument, "DamageCalibration: scc, kg_per_dollar must be >= 0 and lambda_norm > 0");
}

double pigouvian_rate(const DamageCalibration& cal) {
    cal.validate();
    return (cal.scc_usd_per_ton / 1000.0) * cal.kg_per_dollar / cal.lambda_norm;
}

}  // namespace ctax
