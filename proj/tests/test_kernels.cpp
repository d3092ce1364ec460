#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shlab/bounds.hpp"
#include "shlab/heat.hpp"
#include "shlab/kernels.hpp"

using namespace shlab;

namespace {

KernelConfig config_for(const Grid& g, double horizon) {
    KernelConfig cfg;
    const double h2 = g.spacing() * g.spacing();
    cfg.solver.dt = horizon / std::ceil(horizon / h2);
    cfg.horizon = horizon;
    return cfg;
}

const TruncationLadder ladder = TruncationLadder::make({8, 16, 32, 64}, {1e2, 1e3, 1e4});

} // namespace

TEST_CASE("free kernel matches the heat kernel in 1D") {
    const Grid g = Grid::make(1, 1.0, 128);
    const Point y{g.coordinate(64), 0, 0};
    const KernelEstimate est = estimate_kernel(PotentialSpec{}, y, 0.0, ladder, g, config_for(g, 0.1));
    CHECK(est.converged);
    CHECK_FALSE(est.divergent);
    const SpaceTimeField& col = est.top();
    // Sup-norm error relative to the sup of the exact kernel, slice by slice.
    double worst = 0.0;
    for (std::size_t k = 0; k < col.size(); ++k) {
        if (col.time(k) < est.t_min) continue;
        const double peak = free_kernel_eval(y, col.time(k), y, 0.0, 1);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!in_probe_region(g, i, y)) continue;
            const double exact = free_kernel_eval(g.position(i), col.time(k), y, 0.0, 1);
            worst = std::max(worst, std::abs(col.slices[k][i] - exact) / peak);
        }
    }
    CHECK(worst < 0.05);
}

TEST_CASE("ladder columns increase with the truncation level") {
    const Grid g = Grid::make(3, 1.0, 16);
    PotentialSpec spec{potential::InverseSquare{0.2}};
    spec.support.radius = 0.5;
    const Point y{g.coordinate(9), g.coordinate(8), g.coordinate(8)};
    const KernelEstimate est = estimate_kernel(spec, y, 0.0, ladder, g, config_for(g, 0.1));
    CHECK(est.worst_monotonicity >= -1e-8);
    for (std::size_t j = 1; j < est.on_diagonal.size(); ++j) CHECK(est.on_diagonal[j] >= est.on_diagonal[j - 1]);
}

TEST_CASE("mass from ones") {
    const Grid g = Grid::make(2, 1.0, 32);
    const KernelConfig cfg = config_for(g, 0.02);
    const ScalarField free = mass_from_ones(PotentialSpec{}, 0.0, 0.02, g, ladder, cfg);
    CHECK(free[g.flatten({16, 16, 0})] == doctest::Approx(1.0).epsilon(1e-3));
    const ScalarField c = mass_from_ones(PotentialSpec{potential::Constant{2.0}}, 0.0, 0.02, g, ladder, cfg);
    CHECK(c[g.flatten({16, 16, 0})] == doctest::Approx(std::exp(0.04)).epsilon(1e-3));
}

TEST_CASE("Feynman-Kac interpolation holds for a bounded potential") {
    const Grid g = Grid::make(2, 1.0, 24);
    PotentialSpec spec{potential::FromFunction{bump_function(0.5, 0.6), 1.0}};
    const FeynmanKacReport r =
        feynman_kac_check(spec, 1.5, {Point{0.0, 0.0, 0.0}}, g, ladder, config_for(g, 0.05));
    CHECK(r.probes > 0);
    CHECK(r.violation_fraction <= 0.01);
    CHECK_THROWS_AS(feynman_kac_check(spec, 1.0, {Point{}}, g, ladder, config_for(g, 0.05)), ValidationError);
}

TEST_CASE("Gaussian fits of the free kernel") {
    const Grid g = Grid::make(1, 1.0, 96);
    const Point y{g.coordinate(48), 0, 0};
    const KernelEstimate est = estimate_kernel(PotentialSpec{}, y, 0.0, ladder, g, config_for(g, 0.1));
    const BoundFit up = fit_gaussian_upper(est);
    const BoundFit lo = fit_gaussian_lower(est);
    CHECK(up.admissible);
    CHECK(lo.admissible);
    // The probability kernel is (4 pi)^{-1/2} g_{1/4}.
    const double c0 = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    CHECK(up.b <= 0.25 + 1e-12);
    CHECK(lo.b >= 0.25 - 1e-12);
    CHECK(up.c >= c0 * 0.95);
    CHECK(lo.c <= c0 * 1.05);
    for (const auto& [tau, v] : on_diagonal_profile(est)) CHECK(v == doctest::Approx(c0).epsilon(0.05));
}

TEST_CASE("g_b Gaussian and reference constant") {
    CHECK(gaussian_g_b(0.0, 4.0, 2, 1.0) == doctest::Approx(0.25));
    CHECK(gaussian_g_b(1.0, 1.0, 1, 0.5) == doctest::Approx(std::exp(-0.5)));
    CHECK(operator_norm_reference(3, 2.0, 1.0) == doctest::Approx(std::pow(4 * std::numbers::pi, -0.75)));
    CHECK(default_b_grid().front() == doctest::Approx(1.0 / 16));
    CHECK(default_b_grid().back() == doctest::Approx(4.0));
}

TEST_CASE("operator norm of the free kernel stays near the reference") {
    const Grid g = Grid::make(1, 1.0, 64);
    const KernelConfig cfg = config_for(g, 0.05);
    const SourceLattice lattice = make_source_lattice(g, 2, 0.25);
    REQUIRE(lattice.points.size() >= 3);
    std::vector<KernelEstimate> ensemble;
    for (const auto& y : lattice.points) ensemble.push_back(estimate_kernel(PotentialSpec{}, y, 0.0, ladder, g, cfg));
    const OperatorNormReport r = operator_norm_diag(ensemble, lattice, 2.0);
    CHECK(r.constant > 0.0);
    CHECK(r.constant <= 1.1 * operator_norm_reference(1, 2.0, 1.0));
}

TEST_CASE("Nash entropy is finite for the free kernel") {
    const Grid g = Grid::make(1, 3.0, 96);
    const Point y{g.coordinate(48), 0, 0};
    const KernelEstimate est = estimate_kernel(PotentialSpec{}, y, 0.0, ladder, g, config_for(g, 0.2));
    const EntropyTrace tr = nash_entropy_trace(est, SpaceTimeField::constant_in_time(ScalarField(g, 0.0)));
    REQUIRE_FALSE(tr.H.empty());
    for (double m : tr.M) CHECK(m == doctest::Approx(0.0));
    CHECK(std::isfinite(tr.H.back()));
}
