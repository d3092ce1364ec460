#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shlab/positivity.hpp"

using namespace shlab;

namespace {

// Smallest eigenvalue of the ghost-zero Dirichlet Laplacian: N nodes, walls one spacing outside.
double dirichlet_lambda(const Grid& g) {
    const double h = g.spacing();
    return g.dim() * (2.0 - 2.0 * std::cos(std::numbers::pi / (g.points() + 1))) / (h * h);
}

} // namespace

TEST_CASE("e^{-f} solves the equation with the derivative-combination potential") {
    // The discrete chain rule holds to O(h^2); the time differences are exact enough not to show.
    const ScalarFunction b = bump_function(1.0, 0.6, 4.0);
    double previous = 0.0;
    for (int N : {64, 128}) {
        const Grid g = Grid::make(2, 1.0, N);
        SpaceTimeField f(g, 0.0, 0.005);
        for (int k = 0; k <= 20; ++k)
            f.push_back(ScalarField::sample(g, [&](const Point& x) { return b.eval(x, 0.005 * k); }));
        const ForwardReport r = forward_positive_solution(f);
        CHECK(r.u.slices[0].min() > 0.0);
        if (N == 128) {
            CHECK(r.residual < 0.05);
            CHECK(r.residual < 0.35 * previous);
        }
        previous = r.residual;
    }
}

TEST_CASE("log transform recovers a constant potential at second order") {
    // w = e^{1.5 t} times a free solution, so the recovered potential is exactly 1.5 in the continuum.
    double previous = 0.0;
    for (int N : {24, 48}) {
        const Grid g = Grid::make(3, 1.0, N);
        SolverConfig cfg;
        cfg.dt = 0.1 / std::ceil(0.1 / (g.spacing() * g.spacing()));
        const ScalarField u0 = ScalarField::sample(g, [](const Point& x) {
            return std::exp(-2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
        });
        const CauchySolution sol = solve_cauchy(u0, SpaceTimeField::constant_in_time(ScalarField(g, 1.5)), cfg, 0.1);
        const LogTransform t = recover_f(sol, ShellWindow{0.1, 0.4, 0.0});
        CHECK(t.window_nodes > 0);
        if (N == 48) {
            CHECK(t.relative_error < 0.02);
            CHECK(t.relative_error < 0.4 * previous);
            CHECK_THROWS_AS(recover_f(sol, ShellWindow{0.1, 1.0, 0.0}), ValidationError);
        }
        previous = t.relative_error;
    }
}

TEST_CASE("principal eigenvalue of the Dirichlet box") {
    const Grid g = Grid::make(3, 1.0, 16);
    const EigenState full = principal_eigenstate(ScalarField(g, 0.0), {}, false);
    const EigenState reduced = principal_eigenstate(ScalarField(g, 0.0), {}, true);
    CHECK(full.lambda == doctest::Approx(dirichlet_lambda(g)).epsilon(1e-6));
    CHECK(reduced.reduced);
    CHECK(reduced.lambda == doctest::Approx(full.lambda).epsilon(1e-6));
    CHECK(reduced.u.max() == doctest::Approx(1.0));
    CHECK(reduced.u.min() > 0.0);
    const EigenState shifted = principal_eigenstate(ScalarField(g, 2.0));
    CHECK(shifted.lambda == doctest::Approx(full.lambda - 2.0).epsilon(1e-6));
}

TEST_CASE("spectral bottom under refinement") {
    SpectralOptions opt;
    opt.points = {16, 24, 32};
    PotentialSpec weak{potential::InverseSquare{0.1}};
    weak.support.radius = 0.5;
    const SpectralReport a = form_bounded_test(weak, opt);
    CHECK(a.form_bounded);
    CHECK_FALSE(a.diverging);
    PotentialSpec strong{potential::InverseSquare{1.0}};
    strong.support.radius = 0.5;
    const SpectralReport b = form_bounded_test(strong, opt);
    CHECK(b.diverging);
    CHECK_FALSE(b.form_bounded);
    CHECK(b.refinement_trace.size() == 3);
}

TEST_CASE("ground state log identity converges") {
    const PotentialSpec spec{potential::FromFunction{bump_function(1.0, 0.5), 1.0}};
    SpectralOptions coarse;
    coarse.points = {16, 24, 32};
    SpectralOptions fine;
    fine.points = {16, 32, 64};
    const GroundStateLog a = ground_state_log(spec, coarse);
    const GroundStateLog b = ground_state_log(spec, fine);
    CHECK(b.identity_residual < 0.02);
    CHECK(b.identity_residual < 0.5 * a.identity_residual);
    CHECK(b.shift == doctest::Approx(-(b.spectral.lambda_min + b.spectral.b)));
    PotentialSpec strong{potential::InverseSquare{1.0}};
    strong.support.radius = 0.5;
    CHECK_THROWS_AS(ground_state_log(strong, coarse), HypothesisError);
}

TEST_CASE("corollary experiment refuses potentials that are not form bounded") {
    CorollaryOptions opt;
    opt.spectral.points = {16, 24, 32};
    PotentialSpec strong{potential::InverseSquare{1.0}};
    strong.support.radius = 0.5;
    const auto u0 = [](const Point&) { return 1.0; };
    CHECK_THROWS_AS(corollary1_experiment(strong, u0, TruncationLadder::make({1, 2, 4}, {1, 10, 100}), opt),
                    HypothesisError);
}
