#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shlab/grid.hpp"
#include "shlab/heat.hpp"

using namespace shlab;

TEST_CASE("spacing follows the boundary convention") {
    CHECK(Grid::make(1, 1.0, 21).spacing() == doctest::Approx(0.1));
    CHECK(Grid::make(1, 1.0, 20, Boundary::periodic).spacing() == doctest::Approx(0.1));
    CHECK(Grid::make(3, 2.0, 8).size() == 512);
    CHECK_THROWS_AS(Grid::make(4, 1.0, 8), ValidationError);
    CHECK_THROWS_AS(Grid::make(2, -1.0, 8), ValidationError);
}

TEST_CASE("flat index round trip") {
    const Grid g = Grid::make(3, 1.0, 9);
    for (std::size_t i = 0; i < g.size(); i += 13) CHECK(g.flatten(g.unflatten(i)) == i);
    const Index3 idx = g.unflatten(1);
    CHECK(idx[0] == 1);  // axis 0 runs fastest
}

TEST_CASE("laplacian is exact on quadratics away from the faces") {
    const Grid g = Grid::make(2, 1.0, 17);
    const ScalarField f = ScalarField::sample(g, [](const Point& x) { return x[0] * x[0] + 3.0 * x[1] * x[1]; });
    const ScalarField lap = laplacian(f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index3 idx = g.unflatten(i);
        if (idx[0] == 0 || idx[1] == 0 || idx[0] == 16 || idx[1] == 16) continue;
        CHECK(lap[i] == doctest::Approx(8.0).epsilon(1e-10));
    }
}

TEST_CASE("periodic laplacian has the discrete Fourier symbol") {
    const int N = 32;
    const Grid g = Grid::make(1, std::numbers::pi, N, Boundary::periodic);
    const double h = g.spacing();
    const int k = 3;
    const ScalarField f = ScalarField::sample(g, [&](const Point& x) { return std::sin(k * x[0]); });
    const ScalarField lap = laplacian(f);
    const double symbol = -(2.0 - 2.0 * std::cos(k * h)) / (h * h);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(lap[i] == doctest::Approx(symbol * f[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("trapezoid quadrature") {
    const Grid d = Grid::make(1, 1.0, 11);
    CHECK(integrate(ScalarField(d, 1.0)) == doctest::Approx(2.0));
    const Grid p = Grid::make(3, 1.0, 8, Boundary::periodic);
    CHECK(integrate(ScalarField(p, 1.0)) == doctest::Approx(8.0));
    CHECK(lp_norm(ScalarField(p, 2.0), 2.0) == doctest::Approx(2.0 * std::sqrt(8.0)));
}

TEST_CASE("discrete delta has unit mass and reproduces linear functions") {
    const Grid g = Grid::make(3, 1.0, 16);
    const Point y{0.11, -0.23, 0.05};
    const ScalarField d = discrete_delta(g, y);
    CHECK(integrate(d) == doctest::Approx(1.0).epsilon(1e-12));
    const ScalarField x0 = ScalarField::sample(g, [](const Point& x) { return x[0]; });
    double first = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) first += d[i] * x0[i] * g.quadrature_weight(i);
    CHECK(first == doctest::Approx(y[0]).epsilon(1e-12));
}

TEST_CASE("div curl and curl grad vanish on periodic grids") {
    const Grid g = Grid::make(3, 1.0, 12, Boundary::periodic);
    const VectorField a = VectorField::sample(g, [](const Point& x) {
        const double pi = std::numbers::pi;
        return Point{std::sin(pi * x[1]), std::sin(pi * x[0] + 0.3), std::cos(2 * pi * x[0]) * std::sin(pi * x[1])};
    });
    CHECK(divergence(curl(a)).max_abs() < 1e-12);
    const ScalarField phi = ScalarField::sample(g, [](const Point& x) { return std::sin(std::numbers::pi * (x[0] + 2 * x[1])) * std::cos(std::numbers::pi * x[2]); });
    const VectorField c = curl(gradient(phi));
    for (int d = 0; d < 3; ++d) CHECK(c.component(d).max_abs() < 1e-11);
}

TEST_CASE("space-time slices") {
    const Grid g = Grid::make(1, 1.0, 9);
    SpaceTimeField f(g, 0.5, 0.25);
    f.push_back(ScalarField(g, 1.0));
    f.push_back(ScalarField(g, 3.0));
    CHECK(f.end_time() == doctest::Approx(0.75));
    CHECK(f.interpolate(0.625)[2] == doctest::Approx(2.0));
    CHECK(f.at(10.0)[0] == doctest::Approx(3.0));
}

TEST_CASE("free heat flow of a Gaussian") {
    // e^{t Lap} exp(-|x|^2 / (4 s0)) = (s0 / (s0 + t))^{n/2} exp(-|x|^2 / (4 (s0 + t))).
    const Grid g = Grid::make(3, 2.0, 32);
    const double s0 = 0.02, t = 0.03;
    auto gauss = [](double s) {
        return [s](const Point& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (4.0 * s)); };
    };
    const ScalarField u = apply_free_heat(ScalarField::sample(g, gauss(s0)), t);
    const double amp = std::pow(s0 / (s0 + t), 1.5);
    const ScalarField exact = ScalarField::sample(g, gauss(s0 + t));
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) err = std::max(err, std::abs(u[i] - amp * exact[i]));
    CHECK(err / amp < 0.02);
    CHECK(gaussian_smooth(ScalarField::sample(g, gauss(s0)), 0.0).values == ScalarField::sample(g, gauss(s0)).values);
}

TEST_CASE("probability kernel has unit mass") {
    const Grid g = Grid::make(2, 3.0, 121);
    const ScalarField k = ScalarField::sample(g, [](const Point& x) {
        return free_kernel_eval(x, 0.1, Point{0.2, 0.0, 0.0}, 0.0, 2);
    });
    CHECK(integrate(k) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(free_kernel_eval({0, 0, 0}, 1.0, {0, 0, 0}, 0.0, 1, KernelNormalization::paper_g_b, 0.25) == doctest::Approx(1.0));
}
