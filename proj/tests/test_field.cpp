#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "thinfilm/field.hpp"

using namespace thinfilm;

TEST_SUITE("field") {

TEST_CASE("make_grid samples the function on a uniform mesh") {
    const double X = 4.0;
    PeriodicField f = make_grid(X, 16, [](double x) { return 1.0 + x; });
    CHECK(f.size() == 16);
    CHECK(f.dx() == doctest::Approx(0.25));
    CHECK(f.x(0) == 0.0);
    CHECK(f.values[5] == doctest::Approx(1.0 + 5 * 0.25));
    CHECK_THROWS_AS(make_grid(X, 12, [](double) { return 1.0; }), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(X, 4, [](double) { return 1.0; }), std::invalid_argument);
}

TEST_CASE("periodic indexing wraps both directions") {
    PeriodicField f = make_grid(2.0, 8, [](double x) { return x; });
    CHECK(f.at(-1) == f.values[7]);
    CHECK(f.at(8) == f.values[0]);
    CHECK(f.at(17) == f.values[1]);
}

TEST_CASE("mass is the rectangle rule, exact for trig polynomials") {
    const double X = 6.283185307179586;
    PeriodicField f = make_grid(X, 64, [X](double x) { return 2.0 + std::cos(2.0 * M_PI * x / X); });
    // rectangle rule integrates e^{ikx} exactly for 0 < |k| < N
    CHECK(mass(f) == doctest::Approx(2.0 * X).epsilon(1e-14));
}

TEST_CASE("min max linf") {
    PeriodicField f = make_grid(1.0, 8, [](double x) { return x; });
    PeriodicField g = f;
    g.values[3] += 0.5;
    CHECK(f.min() == 0.0);
    CHECK(f.max() == doctest::Approx(7.0 / 8.0));
    CHECK(linf_distance(f, g) == doctest::Approx(0.5));
}

TEST_CASE("local minima: simple interior minimum") {
    std::vector<double> v = {3, 1, 2, 5, 4, 6, 7, 8};
    auto idx = local_minima_indices(v);
    REQUIRE(idx.size() == 2);  // 3>1<2 at index 1, 5>4<6 at index 4
    CHECK(idx[0] == 1);
    CHECK(idx[1] == 4);
}

TEST_CASE("local minima: wrap-around minimum at index 0") {
    std::vector<double> v = {0.5, 2, 3, 4, 5, 4, 3, 1};
    auto idx = local_minima_indices(v);
    REQUIRE(idx.size() == 1);
    CHECK(idx[0] == 0);
}

TEST_CASE("local minima: plateau reports its center and counts once") {
    std::vector<double> v = {5, 2, 2, 2, 5, 6, 7, 4};
    auto idx = local_minima_indices(v);
    REQUIRE(idx.size() == 2);
    CHECK(idx[0] == 2);  // center of the run 1..3
    CHECK(idx[1] == 7);  // 4 sits below both 7 and the wrapped 5
}

TEST_CASE("local minima: plateau wrapping through zero counted once") {
    std::vector<double> v = {2, 2, 5, 6, 7, 6, 5, 2};
    auto idx = local_minima_indices(v);
    REQUIRE(idx.size() == 1);
    // run is {7,0,1}, center is index 0
    CHECK(idx[0] == 0);
}

TEST_CASE("local minima: constant vector has none") {
    std::vector<double> v(8, 1.0);
    CHECK(local_minima_indices(v).empty());
}

}
