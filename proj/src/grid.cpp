#include "shlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace shlab {

Grid Grid::make(int dim, double half_width, int points, Boundary boundary) {
    require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
    require(std::isfinite(half_width) && half_width > 0.0, "grid half_width must be positive");
    require(points >= 8, "grid needs at least 8 points per axis");
    Grid g;
    g.dim_ = dim;
    g.half_width_ = half_width;
    g.points_ = points;
    g.boundary_ = boundary;
    g.spacing_ = boundary == Boundary::periodic ? 2.0 * half_width / points
                                                : 2.0 * half_width / (points - 1);
    std::size_t n = static_cast<std::size_t>(points);
    g.strides_ = {1, n, n * n};
    g.size_ = 1;
    for (int d = 0; d < dim; ++d) g.size_ *= n;
    return g;
}

Index3 Grid::unflatten(std::size_t flat) const {
    Index3 idx{0, 0, 0};
    std::size_t n = static_cast<std::size_t>(points_);
    for (int d = 0; d < dim_; ++d) {
        idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % n);
        flat /= n;
    }
    return idx;
}

std::size_t Grid::flatten(const Index3& idx) const {
    std::size_t flat = 0;
    for (int d = dim_ - 1; d >= 0; --d)
        flat = flat * static_cast<std::size_t>(points_) + static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
    return flat;
}

Point Grid::position(std::size_t flat) const {
    Index3 idx = unflatten(flat);
    Point p{0.0, 0.0, 0.0};
    for (int d = 0; d < dim_; ++d) p[static_cast<std::size_t>(d)] = coordinate(idx[static_cast<std::size_t>(d)]);
    return p;
}

double Grid::radius(std::size_t flat) const {
    Point p = position(flat);
    return std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
}

bool Grid::contains(const Point& p) const {
    for (int d = 0; d < dim_; ++d) {
        double x = p[static_cast<std::size_t>(d)];
        if (!(x >= -half_width_ && x <= half_width_)) return false;
    }
    return true;
}

double Grid::quadrature_weight(std::size_t flat) const {
    double w = cell_volume();
    if (boundary_ == Boundary::periodic) return w;
    Index3 idx = unflatten(flat);
    for (int d = 0; d < dim_; ++d) {
        int i = idx[static_cast<std::size_t>(d)];
        if (i == 0 || i == points_ - 1) w *= 0.5;
    }
    return w;
}

double Grid::cell_volume() const { return std::pow(spacing_, dim_); }

bool Grid::operator==(const Grid& other) const {
    return dim_ == other.dim_ && half_width_ == other.half_width_ && points_ == other.points_ &&
           boundary_ == other.boundary_;
}

// ---------------------------------------------------------------------------

ScalarField::ScalarField(const Grid& g, double fill) : grid(g), values(g.size(), fill) {}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    require(values.size() == grid.size(), "scalar field size does not match grid");
}

ScalarField ScalarField::sample(const Grid& g, const std::function<double(const Point&)>& fn) {
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = fn(g.position(i));
    return f;
}

double ScalarField::max() const { return *std::max_element(values.begin(), values.end()); }
double ScalarField::min() const { return *std::min_element(values.begin(), values.end()); }

double ScalarField::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

bool ScalarField::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

VectorField::VectorField(const Grid& g) : grid(g) {
    for (int d = 0; d < g.dim(); ++d) components[static_cast<std::size_t>(d)].assign(g.size(), 0.0);
}

VectorField VectorField::sample(const Grid& g, const std::function<Point(const Point&)>& fn) {
    VectorField v(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point value = fn(g.position(i));
        for (int d = 0; d < g.dim(); ++d)
            v.components[static_cast<std::size_t>(d)][i] = value[static_cast<std::size_t>(d)];
    }
    return v;
}

ScalarField VectorField::component(int axis) const {
    require(axis >= 0 && axis < grid.dim(), "vector component out of range");
    return ScalarField(grid, components[static_cast<std::size_t>(axis)]);
}

ScalarField VectorField::norm_squared() const {
    ScalarField out(grid);
    for (int d = 0; d < grid.dim(); ++d) {
        const auto& c = components[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < c.size(); ++i) out.values[i] += c[i] * c[i];
    }
    return out;
}

SpaceTimeField::SpaceTimeField(const Grid& g, double start, double step) : grid(g), t0(start), dt(step) {
    require(step > 0.0, "space-time field needs a positive time step");
}

SpaceTimeField SpaceTimeField::constant_in_time(const ScalarField& f) {
    SpaceTimeField st(f.grid, 0.0, 1.0);
    st.slices.push_back(f);
    return st;
}

const ScalarField& SpaceTimeField::at(double t) const {
    require(!slices.empty(), "space-time field has no slices");
    if (slices.size() == 1) return slices.front();
    double k = std::round((t - t0) / dt);
    k = std::clamp(k, 0.0, static_cast<double>(slices.size() - 1));
    return slices[static_cast<std::size_t>(k)];
}

ScalarField SpaceTimeField::interpolate(double t) const {
    require(!slices.empty(), "space-time field has no slices");
    if (slices.size() == 1) return slices.front();
    double s = (t - t0) / dt;
    if (s <= 0.0) return slices.front();
    if (s >= static_cast<double>(slices.size() - 1)) return slices.back();
    auto k = static_cast<std::size_t>(std::floor(s));
    double w = s - static_cast<double>(k);
    ScalarField out(grid);
    const auto& a = slices[k].values;
    const auto& b = slices[k + 1].values;
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = (1.0 - w) * a[i] + w * b[i];
    return out;
}

void SpaceTimeField::push_back(ScalarField f) {
    require(f.grid == grid, "space-time slices must share one grid");
    slices.push_back(std::move(f));
}

double SpaceTimeField::max_abs() const {
    double m = 0.0;
    for (const auto& s : slices) m = std::max(m, s.max_abs());
    return m;
}

bool SpaceTimeField::all_finite() const {
    return std::all_of(slices.begin(), slices.end(), [](const ScalarField& s) { return s.all_finite(); });
}

// ---------------------------------------------------------------------------

namespace {

// Neighbour value along an axis with the grid's boundary convention.
struct AxisWalker {
    const Grid& grid;
    std::span<const double> data;

    double plus(std::size_t flat, int axis, int i) const {
        std::size_t s = grid.stride(axis);
        int n = grid.points();
        if (i + 1 < n) return data[flat + s];
        if (grid.periodic()) return data[flat - s * static_cast<std::size_t>(n - 1)];
        return 0.0;
    }
    double minus(std::size_t flat, int axis, int i) const {
        std::size_t s = grid.stride(axis);
        int n = grid.points();
        if (i > 0) return data[flat - s];
        if (grid.periodic()) return data[flat + s * static_cast<std::size_t>(n - 1)];
        return 0.0;
    }
};

ScalarField central_difference(const ScalarField& f, int axis) {
    const Grid& g = f.grid;
    ScalarField out(g);
    AxisWalker w{g, f.values};
    double inv = 0.5 / g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        int k = g.unflatten(i)[static_cast<std::size_t>(axis)];
        out.values[i] = (w.plus(i, axis, k) - w.minus(i, axis, k)) * inv;
    }
    return out;
}

} // namespace

void apply_laplacian(const Grid& g, std::span<const double> in, std::span<double> out) {
    const int n = g.points();
    const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
    const bool periodic = g.periodic();
    const std::size_t total = g.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (int axis = 0; axis < g.dim(); ++axis) {
        const std::size_t s = g.stride(axis);
        const std::size_t line = s * static_cast<std::size_t>(n);
        for (std::size_t base = 0; base < total; base += line) {
            for (std::size_t off = 0; off < s; ++off) {
                const std::size_t first = base + off;
                for (int k = 0; k < n; ++k) {
                    const std::size_t i = first + s * static_cast<std::size_t>(k);
                    double lo = k > 0 ? in[i - s] : (periodic ? in[first + s * static_cast<std::size_t>(n - 1)] : 0.0);
                    double hi = k + 1 < n ? in[i + s] : (periodic ? in[first] : 0.0);
                    out[i] += (lo - 2.0 * in[i] + hi) * inv_h2;
                }
            }
        }
    }
}

void neighbor_sum(const Grid& g, std::span<const double> in, std::span<double> out) {
    const int n = g.points();
    const bool periodic = g.periodic();
    const std::size_t total = g.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (int axis = 0; axis < g.dim(); ++axis) {
        const std::size_t s = g.stride(axis);
        const std::size_t line = s * static_cast<std::size_t>(n);
        for (std::size_t base = 0; base < total; base += line) {
            for (std::size_t off = 0; off < s; ++off) {
                const std::size_t first = base + off;
                for (int k = 0; k < n; ++k) {
                    const std::size_t i = first + s * static_cast<std::size_t>(k);
                    double lo = k > 0 ? in[i - s] : (periodic ? in[first + s * static_cast<std::size_t>(n - 1)] : 0.0);
                    double hi = k + 1 < n ? in[i + s] : (periodic ? in[first] : 0.0);
                    out[i] += lo + hi;
                }
            }
        }
    }
}

ScalarField laplacian(const ScalarField& field) {
    ScalarField out(field.grid);
    apply_laplacian(field.grid, field.values, out.values);
    return out;
}

VectorField gradient(const ScalarField& field) {
    VectorField out(field.grid);
    for (int d = 0; d < field.grid.dim(); ++d)
        out.components[static_cast<std::size_t>(d)] = central_difference(field, d).values;
    return out;
}

ScalarField divergence(const VectorField& field) {
    const Grid& g = field.grid;
    ScalarField out(g);
    for (int d = 0; d < g.dim(); ++d) {
        ScalarField c(g, field.components[static_cast<std::size_t>(d)]);
        ScalarField dc = central_difference(c, d);
        for (std::size_t i = 0; i < g.size(); ++i) out.values[i] += dc.values[i];
    }
    return out;
}

VectorField curl(const VectorField& field) {
    const Grid& g = field.grid;
    require(g.dim() == 3, "curl is defined for three-dimensional grids only");
    auto d = [&](int comp, int axis) {
        return central_difference(ScalarField(g, field.components[static_cast<std::size_t>(comp)]), axis).values;
    };
    auto dz_uy = d(1, 2), dy_uz = d(2, 1);
    auto dx_uz = d(2, 0), dz_ux = d(0, 2);
    auto dy_ux = d(0, 1), dx_uy = d(1, 0);
    VectorField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.components[0][i] = dy_uz[i] - dz_uy[i];
        out.components[1][i] = dz_ux[i] - dx_uz[i];
        out.components[2][i] = dx_uy[i] - dy_ux[i];
    }
    return out;
}

double integrate(const ScalarField& field) {
    const Grid& g = field.grid;
    if (g.periodic()) {
        double s = 0.0;
        for (double v : field.values) s += v;
        return s * g.cell_volume();
    }
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.quadrature_weight(i) * field.values[i];
    return s;
}

namespace {

// Cell containing y and the fractional offsets inside it (multilinear weights).
void locate(const Grid& g, const Point& y, Index3& base, std::array<double, 3>& frac) {
    const double h = g.spacing();
    const int n = g.points();
    base = {0, 0, 0};
    frac = {0.0, 0.0, 0.0};
    for (int d = 0; d < g.dim(); ++d) {
        auto du = static_cast<std::size_t>(d);
        double s = (y[du] + g.half_width()) / h;
        double k = std::floor(s);
        double t = s - k;
        // Snap points within rounding of a node onto it.
        if (t < 1e-12) t = 0.0;
        if (t > 1.0 - 1e-12) { k += 1.0; t = 0.0; }
        int ki = static_cast<int>(k);
        if (!g.periodic() && ki >= n - 1) { ki = n - 2; t = 1.0; }
        base[du] = ki;
        frac[du] = t;
    }
}

template <typename Fn>
void for_each_corner(const Grid& g, const Index3& base, const std::array<double, 3>& frac, Fn&& fn) {
    const int n = g.points();
    const int corners = 1 << g.dim();
    for (int c = 0; c < corners; ++c) {
        Index3 idx{0, 0, 0};
        double weight = 1.0;
        for (int d = 0; d < g.dim(); ++d) {
            auto du = static_cast<std::size_t>(d);
            bool upper = (c >> d) & 1;
            weight *= upper ? frac[du] : 1.0 - frac[du];
            int k = base[du] + (upper ? 1 : 0);
            if (g.periodic()) k = ((k % n) + n) % n;
            idx[du] = k;
        }
        if (weight != 0.0) fn(g.flatten(idx), weight);
    }
}

} // namespace

ScalarField discrete_delta(const Grid& g, const Point& y) {
    require(g.contains(y), "delta source lies outside the grid box");
    ScalarField out(g);
    Index3 base;
    std::array<double, 3> frac;
    locate(g, y, base, frac);
    for_each_corner(g, base, frac, [&](std::size_t flat, double weight) {
        out.values[flat] += weight / g.quadrature_weight(flat);
    });
    return out;
}

double interpolate_at(const ScalarField& field, const Point& y) {
    const Grid& g = field.grid;
    require(g.contains(y), "interpolation point lies outside the grid box");
    Index3 base;
    std::array<double, 3> frac;
    locate(g, y, base, frac);
    double value = 0.0;
    for_each_corner(g, base, frac, [&](std::size_t flat, double weight) { value += weight * field.values[flat]; });
    return value;
}

double lp_norm(const ScalarField& field, double p) {
    require(p >= 1.0, "lp_norm requires p >= 1");
    if (std::isinf(p)) return field.max_abs();
    const Grid& g = field.grid;
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g.quadrature_weight(i) * std::pow(std::abs(field.values[i]), p);
    return std::pow(s, 1.0 / p);
}

} // namespace shlab
