#include "shlab/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace shlab {

ScalarFunction bump_function(double amplitude, double width, double omega) {
    require(width > 0.0, "bump width must be positive");
    ScalarFunction fn;
    fn.time_dependent = omega != 0.0;
    fn.name = "bump";
    fn.eval = [=](const Point& x, double t) {
        double r2 = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (width * width);
        if (r2 >= 1.0) return 0.0;
        double profile = std::exp(1.0 - 1.0 / (1.0 - r2));
        return amplitude * profile * (1.0 + 0.5 * std::sin(omega * t));
    };
    return fn;
}

PotentialSpec PotentialSpec::scaled(double factor) const {
    PotentialSpec s = *this;
    s.coupling *= factor;
    return s;
}

bool PotentialSpec::time_dependent() const {
    return std::visit(
        [](const auto& k) -> bool {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, potential::Oscillating>) return true;
            else if constexpr (std::is_same_v<K, potential::FromF>) return !k.f.is_static();
            else if constexpr (std::is_same_v<K, potential::FromFunction>) return k.f.time_dependent;
            else if constexpr (std::is_same_v<K, potential::Explicit>) return !k.V.is_static();
            else return false;
        },
        kind);
}

std::string PotentialSpec::describe() const {
    std::ostringstream os;
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, potential::InverseSquare>) os << "inverse_square(a=" << k.a << ")";
            else if constexpr (std::is_same_v<K, potential::LogDerived>) os << "log_derived(b=" << k.b << ")";
            else if constexpr (std::is_same_v<K, potential::Oscillating>) os << "oscillating";
            else if constexpr (std::is_same_v<K, potential::FromF>) os << "from_f(alpha=" << k.alpha << ")";
            else if constexpr (std::is_same_v<K, potential::FromFunction>)
                os << "from_f(" << k.f.name << ", alpha=" << k.alpha << ")";
            else if constexpr (std::is_same_v<K, potential::Explicit>) os << "explicit";
            else os << "constant(c=" << k.c << ")";
        },
        kind);
    if (coupling != 1.0) os << " x " << coupling;
    return os.str();
}

TruncationLadder TruncationLadder::make(std::vector<double> upper, std::vector<double> lower) {
    auto check = [](const std::vector<double>& levels, const char* which) {
        require(levels.size() >= 3, std::string(which) + " truncation ladder needs at least 3 levels");
        for (std::size_t i = 0; i < levels.size(); ++i) {
            require(levels[i] > 0.0, std::string(which) + " truncation levels must be positive");
            if (i > 0) require(levels[i] > levels[i - 1], std::string(which) + " truncation levels must increase");
        }
    };
    check(upper, "upper");
    check(lower, "lower");
    return TruncationLadder{std::move(upper), std::move(lower)};
}

namespace {

std::size_t slice_count(double dt, double horizon) {
    require(dt > 0.0, "time step must be positive");
    require(horizon >= 0.0, "horizon must be non-negative");
    return static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
}

SpaceTimeField sample_function(const ScalarFunction& fn, const Grid& grid, double dt, double horizon) {
    SpaceTimeField f(grid, 0.0, dt);
    const std::size_t count = fn.time_dependent ? slice_count(dt, horizon) : 1;
    for (std::size_t k = 0; k < count; ++k) {
        const double t = dt * static_cast<double>(k);
        f.push_back(ScalarField::sample(grid, [&](const Point& x) { return fn.eval(x, t); }));
    }
    return f;
}

SpaceTimeField scale(SpaceTimeField V, double factor) {
    if (factor == 1.0) return V;
    for (auto& s : V.slices)
        for (double& v : s.values) v *= factor;
    return V;
}

// Expands a static field to explicit slices when the support ends inside the horizon.
SpaceTimeField expand_for_support(SpaceTimeField V, const Support& support, double dt, double horizon) {
    if (!V.is_static() || !(support.duration < horizon)) return V;
    SpaceTimeField out(V.grid, 0.0, dt);
    const std::size_t count = slice_count(dt, horizon);
    for (std::size_t k = 0; k < count; ++k) out.push_back(V.slices.front());
    return out;
}

} // namespace

SpaceTimeField apply_support(const SpaceTimeField& V, const Support& support) {
    SpaceTimeField out = V;
    const Grid& g = V.grid;
    for (std::size_t k = 0; k < out.slices.size(); ++k) {
        auto& s = out.slices[k];
        const bool expired = !V.is_static() && V.time(k) > support.duration;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (expired || g.radius(i) > support.radius) s.values[i] = 0.0;
    }
    return out;
}

SpaceTimeField combine_derivatives(const SpaceTimeField& f, double alpha) {
    require(!f.slices.empty(), "derivative combination needs at least one slice of f");
    const Grid& g = f.grid;
    SpaceTimeField V(g, f.t0, f.dt);
    const std::size_t count = f.slices.size();
    require(count == 1 || count >= 3, "time derivative of f needs at least three slices");
    for (std::size_t k = 0; k < count; ++k) {
        const ScalarField& fk = f.slices[k];
        ScalarField out = laplacian(fk);
        VectorField grad = gradient(fk);
        ScalarField g2 = grad.norm_squared();
        for (std::size_t i = 0; i < g.size(); ++i) out.values[i] -= alpha * g2.values[i];
        if (count > 1) {
            const double inv = 1.0 / (2.0 * f.dt);
            for (std::size_t i = 0; i < g.size(); ++i) {
                double ft;
                if (k == 0)
                    ft = (-3.0 * f.slices[0].values[i] + 4.0 * f.slices[1].values[i] - f.slices[2].values[i]) * inv;
                else if (k + 1 == count)
                    ft = (3.0 * f.slices[k].values[i] - 4.0 * f.slices[k - 1].values[i] +
                          f.slices[k - 2].values[i]) * inv;
                else
                    ft = (f.slices[k + 1].values[i] - f.slices[k - 1].values[i]) * inv;
                out.values[i] -= ft;
            }
        }
        V.push_back(std::move(out));
    }
    return V;
}

SpaceTimeField realize(const PotentialSpec& spec, const Grid& grid, double dt, double horizon) {
    require(spec.support.radius > 0.0 && spec.support.duration > 0.0, "support cylinder must be non-degenerate");
    const double h = grid.spacing();
    SpaceTimeField raw = std::visit(
        [&](const auto& k) -> SpaceTimeField {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, potential::InverseSquare>) {
                return SpaceTimeField::constant_in_time(ScalarField::sample(grid, [&](const Point& x) {
                    double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
                    return k.a / std::max(r2, h * h);
                }));
            } else if constexpr (std::is_same_v<K, potential::LogDerived>) {
                ScalarFunction f;
                f.eval = [b = k.b, h](const Point& x, double) {
                    return b * std::log(std::max(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]), h));
                };
                return combine_derivatives(sample_function(f, grid, dt, horizon), 1.0);
            } else if constexpr (std::is_same_v<K, potential::Oscillating>) {
                const double eps = k.epsilon.value_or(4.0 * h);
                require(eps > 0.0, "oscillating potential needs a positive regularization epsilon");
                ScalarFunction f;
                f.time_dependent = true;
                f.eval = [eps](const Point& x, double t) {
                    double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                    return std::sin(1.0 / std::max(std::abs(r - std::sqrt(t)), eps));
                };
                require(slice_count(dt, horizon) >= 3, "oscillating potential needs at least three time slices");
                return combine_derivatives(sample_function(f, grid, dt, horizon), 1.0);
            } else if constexpr (std::is_same_v<K, potential::FromF>) {
                require(k.alpha >= 1.0, "derivative combination requires alpha >= 1");
                require(k.f.grid == grid, "f must be sampled on the realization grid");
                if (!k.f.is_static())
                    require(k.f.end_time() + 1e-12 >= horizon, "f is missing time slices up to the horizon");
                return combine_derivatives(k.f, k.alpha);
            } else if constexpr (std::is_same_v<K, potential::FromFunction>) {
                require(k.alpha >= 1.0, "derivative combination requires alpha >= 1");
                if (k.f.time_dependent)
                    require(slice_count(dt, horizon) >= 3, "time-dependent f needs at least three time slices");
                return combine_derivatives(sample_function(k.f, grid, dt, horizon), k.alpha);
            } else if constexpr (std::is_same_v<K, potential::Explicit>) {
                require(k.V.grid == grid, "explicit potential must live on the realization grid");
                return k.V;
            } else {
                return SpaceTimeField::constant_in_time(ScalarField(grid, k.c));
            }
        },
        spec.kind);
    raw = expand_for_support(std::move(raw), spec.support, dt, horizon);
    return scale(apply_support(raw, spec.support), spec.coupling);
}

SpaceTimeField truncate_above(const SpaceTimeField& V, double level) {
    SpaceTimeField out = V;
    for (auto& s : out.slices)
        for (double& v : s.values) v = std::min(v, level);
    return out;
}

SpaceTimeField truncate_below(const SpaceTimeField& V, double level) {
    SpaceTimeField out = V;
    for (auto& s : out.slices)
        for (double& v : s.values) v = std::max(v, -level);
    return out;
}

double max_subcritical_coupling(int dim) {
    require(dim >= 3, "the inverse-square threshold is defined for n >= 3");
    const double m = dim - 2.0;
    return m * m / 4.0;
}

} // namespace shlab
