#include <doctest.h>

#include <cmath>

#include "shlab/heat.hpp"
#include "shlab/solver.hpp"

using namespace shlab;

namespace {

ScalarField bump(const Grid& g, double width) {
    return ScalarField::sample(g, [width](const Point& x) {
        return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width));
    });
}

// Largest step <= h^2 that divides the horizon.
double step_for(const Grid& g, double horizon) {
    return horizon / std::ceil(horizon / (g.spacing() * g.spacing()));
}

SpaceTimeField constant(const Grid& g, double c) { return SpaceTimeField::constant_in_time(ScalarField(g, c)); }

} // namespace

TEST_CASE("free solution of a Gaussian") {
    const Grid g = Grid::make(1, 2.0, 128);
    const double s0 = 0.01, T = 0.05;
    const ScalarField u0 = ScalarField::sample(g, [&](const Point& x) { return std::exp(-x[0] * x[0] / (4 * s0)); });
    SolverConfig cfg;
    cfg.dt = 1e-3;
    const CauchySolution sol = solve_cauchy(u0, constant(g, 0.0), cfg, T);
    const ScalarField& u = sol.field.slices.back();
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.position(i)[0];
        err = std::max(err, std::abs(u[i] - std::sqrt(s0 / (s0 + T)) * std::exp(-x * x / (4 * (s0 + T)))));
    }
    CHECK(err < 2e-3);
}

TEST_CASE("constant potential multiplies by e^{ct}") {
    const Grid g = Grid::make(2, 1.0, 32);
    SolverConfig cfg;
    cfg.dt = 2e-3;
    const CauchySolution free = solve_cauchy(bump(g, 0.3), constant(g, 0.0), cfg, 0.1);
    const CauchySolution with_c = solve_cauchy(bump(g, 0.3), constant(g, -3.0), cfg, 0.1);
    const double factor = std::exp(-0.3);
    const auto& a = free.field.slices.back();
    const auto& b = with_c.field.slices.back();
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(b[i] == doctest::Approx(factor * a[i]).epsilon(1e-6).scale(1e-12));
}

TEST_CASE("positivity and comparison") {
    const Grid g = Grid::make(3, 1.0, 16);
    SolverConfig cfg;
    cfg.dt = step_for(g, 0.05);
    SpaceTimeField low(g, 0.0, 1.0), high(g, 0.0, 1.0);
    low.push_back(ScalarField::sample(g, [](const Point& x) { return -50.0 * (x[0] > 0); }));
    high.push_back(ScalarField::sample(g, [](const Point& x) { return 20.0 * (x[1] > 0); }));
    const CauchySolution a = solve_cauchy(bump(g, 0.4), low, cfg, 0.05);
    const CauchySolution b = solve_cauchy(bump(g, 0.4), high, cfg, 0.05);
    for (const auto& s : a.field.slices) CHECK(s.min() >= 0.0);
    CHECK(compare_solutions(a, b).verdict == Ordering::b_geq_a);
    CHECK(compare_solutions(b, a).verdict == Ordering::a_geq_b);
    CHECK(compare_solutions(a, a).verdict == Ordering::equal);
}

TEST_CASE("duhamel residual is small for a smooth potential") {
    const Grid g = Grid::make(2, 1.0, 32);
    SolverConfig cfg;
    cfg.dt = step_for(g, 0.05);
    const SpaceTimeField V = SpaceTimeField::constant_in_time(
        ScalarField::sample(g, [](const Point& x) { return 2.0 * std::cos(3.0 * x[0]) * std::cos(2.0 * x[1]); }));
    const CauchySolution sol = solve_cauchy(bump(g, 0.3), V, cfg, 0.05);
    CHECK(duhamel_residual(sol) < 0.02);
}

TEST_CASE("backward Euler agrees with Crank-Nicolson to first order") {
    const Grid g = Grid::make(1, 1.0, 64);
    SolverConfig cn;
    cn.dt = 1e-4;
    SolverConfig be = cn;
    be.scheme = Scheme::backward_euler;
    const auto a = solve_cauchy(bump(g, 0.3), constant(g, 1.0), cn, 0.02).field.slices.back();
    const auto b = solve_cauchy(bump(g, 0.3), constant(g, 1.0), be, 0.02).field.slices.back();
    double diff = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
    CHECK(diff / a.max() < 5e-3);
}

TEST_CASE("recording and start time") {
    const Grid g = Grid::make(1, 1.0, 16);
    SolverConfig cfg;
    cfg.dt = 0.01;
    cfg.record_every = 5;
    cfg.start_time = 0.3;
    const CauchySolution sol = solve_cauchy(bump(g, 0.3), constant(g, 0.0), cfg, 0.1);
    CHECK(sol.field.size() == 3);
    CHECK(sol.field.t0 == doctest::Approx(0.3));
    CHECK(sol.field.end_time() == doctest::Approx(0.4));
    CHECK(sol.diagnostics.size() == 11);
}

TEST_CASE("invalid input") {
    const Grid g = Grid::make(1, 1.0, 16);
    SolverConfig cfg;
    cfg.dt = -1.0;
    CHECK_THROWS_AS(solve_cauchy(bump(g, 0.3), constant(g, 0.0), cfg, 0.1), ValidationError);
    cfg.dt = 0.03;
    CHECK_THROWS_AS(solve_cauchy(bump(g, 0.3), constant(g, 0.0), cfg, 0.1), ValidationError);
    CHECK_THROWS_AS(parse_scheme("leapfrog"), ValidationError);
    CHECK(parse_scheme(to_string(Scheme::backward_euler)) == Scheme::backward_euler);
}
