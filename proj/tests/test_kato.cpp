#include <doctest.h>

#include <cmath>

#include "shlab/kato.hpp"

using namespace shlab;

TEST_CASE("convolving a constant gives elapsed time") {
    const Grid g = Grid::make(2, 1.0, 16, Boundary::periodic);
    ConvolutionOptions opt;
    opt.horizon = 0.5;
    opt.outputs = 3;
    const HeatConvolution c = heat_convolve(SpaceTimeField::constant_in_time(ScalarField(g, 1.0)), opt);
    REQUIRE(c.result.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(c.result.slices[k].max() == doctest::Approx(c.result.time(k)).epsilon(1e-3));
        CHECK(c.result.slices[k].min() == doctest::Approx(c.result.time(k)).epsilon(1e-3));
    }
}

TEST_CASE("g_b kernel carries the (pi / b)^{n/2} mass") {
    const Grid g = Grid::make(1, 1.0, 16, Boundary::periodic);
    ConvolutionOptions opt;
    opt.b = 0.25;
    opt.horizon = 1.0;
    opt.outputs = 2;
    const HeatConvolution c = heat_convolve(SpaceTimeField::constant_in_time(ScalarField(g, 1.0)), opt);
    CHECK(c.result.slices.back().max() == doctest::Approx(std::sqrt(4.0 * M_PI)).epsilon(1e-3));
}

TEST_CASE("bounded potential is heat bounded") {
    RefinementPlan plan;
    plan.dim = 2;
    plan.points = {16, 32, 64};
    const ScalarFunction b = bump_function(2.0, 0.8);
    const FieldSource src = static_source([b](const Point& x, double) { return b.eval(x, 0.0); }, "bump");
    const Classification c = classify(src, plan);
    CHECK(c.verdict == Verdict::heat_bounded);
    CHECK(c.lp_stable);
    CHECK(c.levels.size() == 3);
}

TEST_CASE("non-integrable singularity is not heat bounded") {
    RefinementPlan plan;
    plan.dim = 1;
    plan.points = {32, 64, 128, 256};
    const FieldSource src = static_source(
        [](const Point& x, double h) { return std::abs(x[0]) < 1.0 ? 1.0 / std::max(std::abs(x[0]), h) : 0.0; },
        "chi/|x|");
    const Classification c = classify(src, plan);
    CHECK(c.verdict != Verdict::heat_bounded);
    CHECK(c.raw_slope > 0.0);
}

TEST_CASE("gradient square of a bump is bounded") {
    RefinementPlan plan;
    plan.dim = 2;
    plan.points = {32, 64, 128};
    const ScalarFunction f = bump_function(1.0, 0.8);
    FieldSource src;
    src.name = "bump";
    src.sample = [f](const Grid& g) {
        return SpaceTimeField::constant_in_time(ScalarField::sample(g, [&](const Point& x) { return f.eval(x, 0.0); }));
    };
    const GradientSquareReport r = gradient_square_heat_test(src, 0.25, plan);
    CHECK(r.bounded);
    CHECK(r.sup_trace.size() == 3);
}

TEST_CASE("verdict names") {
    CHECK(to_string(Verdict::almost_heat_bounded) == "almost_heat_bounded");
    CHECK(to_string(Verdict::heat_bounded) == "heat_bounded");
}
