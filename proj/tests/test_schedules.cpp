#include "doctest.h"

#include <cmath>

#include "error.hpp"
#include "schedules.hpp"

using namespace ctax;

TEST_CASE("linear income tax schedule") {
    IncomeTaxSchedule s({{0.0, 0.0}, {100000.0, 20000.0}});
    auto [t, m] = s.eval(50000.0);
    CHECK(t == doctest::Approx(10000.0).epsilon(1e-15));
    CHECK(m == doctest::Approx(0.20).epsilon(1e-15));
    CHECK_THROWS_AS(s.eval(-1.0), Error);
    CHECK_THROWS_AS(s.eval(100001.0), Error);
}

TEST_CASE("income tax evaluation at a knot reproduces the ordinate") {
    IncomeTaxSchedule s({{1000, -500}, {20000, 1000}, {60000, 9000}, {200000, 60000}});
    CHECK(s.liability(60000) == 9000.0);
    CHECK(s.liability(200000) == 60000.0);
}

TEST_CASE("income tax rejects marginal rates at or above one") {
    CHECK_THROWS_AS(IncomeTaxSchedule({{0, 0}, {100, 150}}), Error);
}

TEST_CASE("pigouvian rate") {
    CHECK(pigouvian_rate({200.0, 2.0, 1.0}) == 0.40);
    CHECK(pigouvian_rate({0.0, 2.415, 1.0}) == 0.0);
    CHECK(pigouvian_rate({200.0, 2.415, 1.0}) == doctest::Approx(0.483).epsilon(1e-15));
    CHECK(pigouvian_rate({400.0, 2.0, 1.0}) == 2.0 * pigouvian_rate({200.0, 2.0, 1.0}));
    CHECK(pigouvian_rate({200.0, 2.0, 2.0}) == 0.20);
    CHECK_THROWS_AS(pigouvian_rate({-1.0, 2.0, 1.0}), Error);
    CHECK_THROWS_AS(pigouvian_rate({200.0, 2.0, 0.0}), Error);
}

TEST_CASE("linear commodity tax") {
    CommodityTax t = CommodityTax::linear(0.40);
    auto [l, m] = t.eval(100.0);
    CHECK(l == doctest::Approx(40.0).epsilon(1e-15));
    CHECK(m == 0.40);
    auto [l0, m0] = t.eval(0.0);
    CHECK(l0 == 0.0);
    CHECK(m0 == 0.40);
    CHECK_THROWS_AS(CommodityTax::linear(-1.0), Error);
}

TEST_CASE("rate-knot commodity tax returns knot rates exactly and integrates them") {
    CommodityTax t = CommodityTax::from_rates({{0, 0.4}, {1000, 0.4}, {2000, 0.45}, {3000, 0.38}, {5000, 0.38}});
    CHECK(t.marginal_rate(2000) == 0.45);
    CHECK(t.marginal_rate(3000) == 0.38);
    // liability is the integral of the rate
    double sum = 0.0;
    int n = 20000;
    for (int i = 0; i < n; ++i) sum += t.marginal_rate((i + 0.5) * 2500.0 / n) * 2500.0 / n;
    CHECK(t.liability(2500) == doctest::Approx(sum).epsilon(1e-8));
    CHECK(t.liability(0) == 0.0);
    CHECK_THROWS_AS(t.eval(5001), Error);
}

TEST_CASE("level-knot commodity tax reproduces knots") {
    CommodityTax t = CommodityTax::from_levels({{0, 0}, {100, 40}, {300, 130}});
    CHECK(t.liability(100) == 40.0);
    CHECK(t.liability(300) == 130.0);
    CHECK_THROWS_AS(t.eval(301), Error);
}

TEST_CASE("income grid invariants") {
    std::vector<double> z = {1, 2, 3, 4};
    IncomeGrid g = IncomeGrid::normalized(z, {1, 1, 1, 1});
    CHECK(g.cdf().back() == doctest::Approx(1.0));
    CHECK(g.expectation({1, 1, 1, 1}) == doctest::Approx(1.0));
    IncomeGrid m = IncomeGrid::from_masses(z, {0.1, 0.2, 0.3, 0.4});
    CHECK(m.expectation({1, 2, 3, 4}) == doctest::Approx(3.0).epsilon(1e-14));
    CHECK_THROWS_AS(IncomeGrid(z, {1, 1, 1, 1}), Error);
    CHECK_THROWS_AS(IncomeGrid::normalized({1, 1, 2}, {1, 1, 1}), Error);
}
