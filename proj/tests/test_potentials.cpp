#include <doctest.h>

#include <cmath>

#include "shlab/potentials.hpp"

using namespace shlab;

TEST_CASE("inverse square is clamped at the grid scale") {
    const Grid g = Grid::make(3, 1.0, 16);
    PotentialSpec spec{potential::InverseSquare{0.2}};
    const SpaceTimeField V = realize(spec, g, 0.01, 0.0);
    REQUIRE(V.is_static());
    const double h2 = g.spacing() * g.spacing();
    for (std::size_t i = 0; i < g.size(); i += 7) {
        const double r2 = g.radius(i) * g.radius(i);
        CHECK(V.slices[0][i] == doctest::Approx(0.2 / std::max(r2, h2)));
    }
}

TEST_CASE("derivative combination is exact on quadratics") {
    // f = |x|^2: Lap f = 2n, |grad f|^2 = 4|x|^2, both exact for central differences.
    const Grid g = Grid::make(3, 1.0, 12);
    SpaceTimeField f(g, 0.0, 1.0);
    f.push_back(ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }));
    const SpaceTimeField V = combine_derivatives(f, 2.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index3 idx = g.unflatten(i);
        bool interior = true;
        for (int d = 0; d < 3; ++d) interior = interior && idx[d] > 0 && idx[d] < 11;
        if (!interior) continue;
        const double r = g.radius(i);
        CHECK(V.slices[0][i] == doctest::Approx(6.0 - 8.0 * r * r).epsilon(1e-10));
    }
}

TEST_CASE("time derivative enters with a minus sign") {
    // f = t^2 (no space dependence): V = -2t.
    const Grid g = Grid::make(1, 1.0, 9);
    SpaceTimeField f(g, 0.0, 0.1);
    for (int k = 0; k <= 10; ++k) f.push_back(ScalarField(g, 0.01 * k * k));
    const SpaceTimeField V = combine_derivatives(f, 1.0);
    for (int k = 0; k <= 10; ++k) CHECK(V.slices[k][4] == doctest::Approx(-0.2 * k).epsilon(1e-9).scale(1.0));
}

TEST_CASE("log derived potential approaches 0.25 / r^2 away from the origin") {
    const Grid g = Grid::make(3, 1.0, 64);
    PotentialSpec spec{potential::LogDerived{0.5}};
    const SpaceTimeField V = realize(spec, g, 0.01, 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.radius(i);
        if (r < 0.3 || r > 0.5) continue;
        worst = std::max(worst, std::abs(V.slices[0][i] * r * r / 0.25 - 1.0));
    }
    CHECK(worst < 0.05);
}

TEST_CASE("truncation and support") {
    const Grid g = Grid::make(1, 1.0, 9);
    SpaceTimeField V(g, 0.0, 1.0);
    V.push_back(ScalarField::sample(g, [](const Point& x) { return 10.0 * x[0]; }));
    const SpaceTimeField a = truncate_above(V, 2.0);
    const SpaceTimeField b = truncate_below(V, 3.0);
    CHECK(a.slices[0].max() == doctest::Approx(2.0));
    CHECK(a.slices[0].min() == doctest::Approx(-10.0));
    CHECK(b.slices[0].min() == doctest::Approx(-3.0));
    const SpaceTimeField s = apply_support(V, Support{0.5, 1.0});
    CHECK(s.slices[0][0] == 0.0);
    CHECK(s.slices[0][3] == doctest::Approx(-2.5));
}

TEST_CASE("spec scaling and description") {
    PotentialSpec spec{potential::Constant{2.0}};
    const Grid g = Grid::make(1, 1.0, 9);
    CHECK(realize(spec.scaled(1.5), g, 0.1, 0.0).slices[0][3] == doctest::Approx(3.0));
    CHECK_FALSE(spec.time_dependent());
    CHECK_FALSE(spec.describe().empty());
    CHECK(max_subcritical_coupling(3) == doctest::Approx(0.25));
}

TEST_CASE("ladder validation") {
    CHECK_NOTHROW(TruncationLadder::make({1, 2, 4}, {1, 10, 100}));
    CHECK_THROWS_AS(TruncationLadder::make({1, 2}, {1, 10, 100}), ValidationError);
    CHECK_THROWS_AS(TruncationLadder::make({1, 4, 2}, {1, 10, 100}), ValidationError);
    CHECK_THROWS_AS(TruncationLadder::make({1, 2, 4}, {-1, 10, 100}), ValidationError);
}

TEST_CASE("bump function") {
    const ScalarFunction b = bump_function(2.0, 0.5);
    CHECK(b.eval({0, 0, 0}, 0.0) == doctest::Approx(2.0));
    CHECK(b.eval({0.6, 0, 0}, 0.0) == 0.0);
    CHECK_FALSE(b.time_dependent);
    CHECK(bump_function(1.0, 0.5, 3.0).time_dependent);
}
