#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "shlab/error.hpp"

namespace shlab {

enum class Boundary { dirichlet_zero, periodic };

using Point = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/**
 * Uniform box discretization of [-L, L]^n, n in {1, 2, 3}.
 *
 * Dirichlet grids carry nodes on both faces (h = 2L/(N-1)); values beyond the
 * last node are taken as zero by every stencil. Periodic grids identify -L
 * with L (h = 2L/N). Flat indices run with axis 0 fastest.
 */
class Grid {
public:
    static Grid make(int dim, double half_width, int points,
                     Boundary boundary = Boundary::dirichlet_zero);

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    int points() const { return points_; }
    Boundary boundary() const { return boundary_; }
    double spacing() const { return spacing_; }
    bool periodic() const { return boundary_ == Boundary::periodic; }

    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return strides_[static_cast<std::size_t>(axis)]; }

    double coordinate(int i) const { return -half_width_ + spacing_ * i; }
    Index3 unflatten(std::size_t flat) const;
    std::size_t flatten(const Index3& idx) const;
    Point position(std::size_t flat) const;
    double radius(std::size_t flat) const;
    bool contains(const Point& p) const;

    // Trapezoid weight of a node (h^n in the interior, halved per dirichlet face).
    double quadrature_weight(std::size_t flat) const;
    double cell_volume() const;

    bool operator==(const Grid& other) const;
    bool operator!=(const Grid& other) const { return !(*this == other); }

private:
    Grid() = default;

    int dim_ = 1;
    double half_width_ = 1.0;
    int points_ = 8;
    Boundary boundary_ = Boundary::dirichlet_zero;
    double spacing_ = 0.0;
    std::size_t size_ = 0;
    std::array<std::size_t, 3> strides_{1, 1, 1};
};

struct ScalarField {
    Grid grid;
    std::vector<double> values;

    explicit ScalarField(const Grid& g, double fill = 0.0);
    ScalarField(const Grid& g, std::vector<double> v);

    static ScalarField sample(const Grid& g, const std::function<double(const Point&)>& fn);

    std::size_t size() const { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const { return values; }

    double max() const;
    double min() const;
    double max_abs() const;
    bool all_finite() const;
};

struct VectorField {
    Grid grid;
    std::array<std::vector<double>, 3> components;

    explicit VectorField(const Grid& g);
    static VectorField sample(const Grid& g, const std::function<Point(const Point&)>& fn);

    ScalarField component(int axis) const;
    ScalarField norm_squared() const;
};

/**
 * Ordered time slices over one grid; slice k sits at t0 + k * dt. A single
 * slice represents a time-independent field and is returned for every time.
 */
struct SpaceTimeField {
    Grid grid;
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<ScalarField> slices;

    SpaceTimeField(const Grid& g, double start, double step);
    static SpaceTimeField constant_in_time(const ScalarField& f);

    bool is_static() const { return slices.size() == 1; }
    std::size_t size() const { return slices.size(); }
    double time(std::size_t k) const { return t0 + dt * static_cast<double>(k); }
    double end_time() const { return time(slices.empty() ? 0 : slices.size() - 1); }

    // Nearest slice to t (clamped to the recorded range).
    const ScalarField& at(double t) const;
    // Linear interpolation in time between the bracketing slices.
    ScalarField interpolate(double t) const;
    void push_back(ScalarField f);

    double max_abs() const;
    bool all_finite() const;
};

ScalarField laplacian(const ScalarField& field);
VectorField gradient(const ScalarField& field);
ScalarField divergence(const VectorField& field);
VectorField curl(const VectorField& field);
double integrate(const ScalarField& field);
ScalarField discrete_delta(const Grid& grid, const Point& y);
double lp_norm(const ScalarField& field, double p);
// Multilinear interpolation at an arbitrary point of the box.
double interpolate_at(const ScalarField& field, const Point& p);

// Stencil kernels on raw arrays (used by the implicit solvers).
void apply_laplacian(const Grid& grid, std::span<const double> in, std::span<double> out);
// out_i = sum of the 2n axis neighbours of node i (ghost zero / periodic wrap).
void neighbor_sum(const Grid& grid, std::span<const double> in, std::span<double> out);

} // namespace shlab
