#include "shlab/positivity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>

#include "shlab/parallel.hpp"

namespace shlab {

ForwardReport forward_positive_solution(const SpaceTimeField& f) {
    require(!f.slices.empty(), "f has no slices");
    require(f.all_finite(), "f must be finite");
    const Grid& g = f.grid;
    ForwardReport report{SpaceTimeField(g, f.t0, f.dt), combine_derivatives(f, 1.0), 0.0, 0.0};
    for (const auto& slice : f.slices) {
        ScalarField u(g);
        for (std::size_t i = 0; i < g.size(); ++i) {
            u.values[i] = std::exp(-slice.values[i]);
            if (!std::isfinite(u.values[i])) throw NumericalError("e^{-f} overflows (f is too negative)");
        }
        report.u.push_back(std::move(u));
    }
    // e^{-f} does not vanish on the faces, so the ghost-zero stencil is only
    // meaningful one node in from a dirichlet face.
    std::vector<std::uint8_t> inside(g.size(), 1);
    if (!g.periodic()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Index3 idx = g.unflatten(i);
            for (int d = 0; d < g.dim(); ++d)
                if (idx[static_cast<std::size_t>(d)] == 0 || idx[static_cast<std::size_t>(d)] == g.points() - 1) inside[i] = 0;
        }
    }
    const std::size_t count = report.u.size();
    for (std::size_t k = 0; k < count; ++k) {
        const ScalarField& u = report.u.slices[k];
        ScalarField r = laplacian(u);
        const ScalarField& V = report.V.slices[k];
        for (std::size_t i = 0; i < g.size(); ++i) {
            double ut = 0.0;
            if (count > 1) {
                const auto& s = report.u.slices;
                if (k == 0) ut = (-3.0 * s[0].values[i] + 4.0 * s[1].values[i] - s[2].values[i]) / (2.0 * f.dt);
                else if (k + 1 == count)
                    ut = (3.0 * s[k].values[i] - 4.0 * s[k - 1].values[i] + s[k - 2].values[i]) / (2.0 * f.dt);
                else ut = (s[k + 1].values[i] - s[k - 1].values[i]) / (2.0 * f.dt);
            }
            r.values[i] += V.values[i] * u.values[i] - ut;
        }
        double r2 = 0.0, u2 = 0.0, r_sup = 0.0, u_sup = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!inside[i]) continue;
            const double w = g.quadrature_weight(i);
            r2 += w * r.values[i] * r.values[i];
            u2 += w * u.values[i] * u.values[i];
            r_sup = std::max(r_sup, std::abs(r.values[i]));
            u_sup = std::max(u_sup, std::abs(u.values[i]));
        }
        if (u2 > 0.0) report.residual = std::max(report.residual, std::sqrt(r2 / u2));
        if (u_sup > 0.0) report.residual_max = std::max(report.residual_max, r_sup / u_sup);
    }
    return report;
}

LogTransform recover_f(const CauchySolution& sol, const ShellWindow& window) {
    const SpaceTimeField& w = sol.field;
    const Grid& g = w.grid;
    require(w.size() >= 3, "log transform needs at least three recorded slices");
    require(window.r_out > window.r_in && window.r_in >= 0.0, "window shell must satisfy 0 <= r_in < r_out");
    LogTransform out{w, SpaceTimeField(g, w.t0, w.dt), SpaceTimeField(g, w.t0, w.dt)};
    for (const auto& slice : w.slices) {
        ScalarField f(g);
        for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = -std::log(slice.values[i]);
        out.f.push_back(std::move(f));
    }
    out.residual_V = combine_derivatives(out.f, 1.0);
    const double h = g.spacing();
    double vmax = 0.0, err = 0.0, pointwise = 0.0, rms = 0.0;
    std::size_t count = 0;
    std::vector<std::pair<double, double>> samples;
    for (std::size_t k = 1; k + 1 < w.size(); ++k) {
        if (w.time(k) - w.t0 < window.t_from) continue;
        const ScalarField V = sol.potential.interpolate(w.time(k));
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double r = g.radius(i);
            if (r < window.r_in || r > window.r_out) continue;
            // Stencil neighbours must be positive too.
            if (!(w.slices[k].values[i] > 0.0) || r + h > g.half_width())
                throw ValidationError("w is not positive inside the comparison window");
            const double rv = out.residual_V.slices[k].values[i];
            if (!std::isfinite(rv)) throw ValidationError("w is not positive inside the comparison window");
            samples.emplace_back(V.values[i], rv);
            vmax = std::max(vmax, std::abs(V.values[i]));
            err = std::max(err, std::abs(rv - V.values[i]));
        }
    }
    require(!samples.empty(), "comparison window contains no nodes");
    const double floor = std::max(1e-12 * vmax, 1e-300);
    for (const auto& [v, rv] : samples) {
        const double rel = std::abs(rv - v) / std::max(std::abs(v), floor);
        pointwise = std::max(pointwise, rel);
        rms += rel * rel;
        ++count;
    }
    out.max_abs_error = err;
    out.relative_error = vmax > 0.0 ? err / vmax : err;
    out.pointwise_error = pointwise;
    out.rms_relative_error = std::sqrt(rms / static_cast<double>(count));
    out.window_nodes = count;
    return out;
}

namespace {

bool mirror_symmetric(const ScalarField& V) {
    const Grid& g = V.grid;
    if (g.periodic()) return false;
    const double tol = 1e-12 * std::max(1.0, V.max_abs());
    const int n = g.points();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Index3 idx = g.unflatten(i);
        for (int d = 0; d < g.dim(); ++d) {
            Index3 m = idx;
            m[static_cast<std::size_t>(d)] = n - 1 - idx[static_cast<std::size_t>(d)];
            if (std::abs(V.values[i] - V.values[g.flatten(m)]) > tol) return false;
        }
    }
    return true;
}

// -Lap_h - V on one reflection cell (indices at or above the centre along every
// axis). Mirror images supply the missing neighbours; with an odd point count
// the centre plane is shared, which the weights account for.
struct ReducedProblem {
    const Grid& grid;
    int m = 0;       // points per axis in the cell
    bool odd = false;
    std::array<std::size_t, 3> strides{1, 1, 1};
    std::size_t size = 0;
    std::vector<double> V, weights;

    explicit ReducedProblem(const ScalarField& full) : grid(full.grid) {
        const int n = grid.points();
        odd = n % 2 == 1;
        m = odd ? (n + 1) / 2 : n / 2;
        size = 1;
        for (int d = 0; d < grid.dim(); ++d) {
            strides[static_cast<std::size_t>(d)] = size;
            size *= static_cast<std::size_t>(m);
        }
        V.resize(size);
        weights.assign(size, 1.0);
        for (std::size_t r = 0; r < size; ++r) {
            Index3 idx = unflatten(r);
            Index3 f{0, 0, 0};
            for (int d = 0; d < grid.dim(); ++d) {
                const auto du = static_cast<std::size_t>(d);
                f[du] = full_index(idx[du]);
                if (odd && idx[du] == 0) weights[r] *= 0.5;
            }
            V[r] = full.values[grid.flatten(f)];
        }
    }

    int full_index(int j) const { return odd ? (grid.points() - 1) / 2 + j : grid.points() / 2 + j; }
    int reduced_index(int i) const {
        const int n = grid.points();
        if (odd) return std::abs(i - (n - 1) / 2);
        return i >= n / 2 ? i - n / 2 : n / 2 - 1 - i;
    }

    Index3 unflatten(std::size_t r) const {
        Index3 idx{0, 0, 0};
        for (int d = 0; d < grid.dim(); ++d) {
            idx[static_cast<std::size_t>(d)] = static_cast<int>(r % static_cast<std::size_t>(m));
            r /= static_cast<std::size_t>(m);
        }
        return idx;
    }

    void apply(std::span<const double> in, std::span<double> out) const {
        const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
        for (std::size_t r = 0; r < size; ++r) out[r] = -V[r] * in[r];
        for (int d = 0; d < grid.dim(); ++d) {
            const std::size_t s = strides[static_cast<std::size_t>(d)];
            const std::size_t line = s * static_cast<std::size_t>(m);
            for (std::size_t base = 0; base < size; base += line) {
                for (std::size_t off = 0; off < s; ++off) {
                    const std::size_t first = base + off;
                    for (int k = 0; k < m; ++k) {
                        const std::size_t i = first + s * static_cast<std::size_t>(k);
                        double lo;
                        if (k > 0) lo = in[i - s];
                        else lo = odd ? in[i + s] : in[i];
                        const double hi = k + 1 < m ? in[i + s] : 0.0;
                        out[i] -= (lo - 2.0 * in[i] + hi) * inv_h2;
                    }
                }
            }
        }
    }

    ScalarField expand(const std::vector<double>& reduced) const {
        ScalarField full(grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Index3 idx = grid.unflatten(i);
            std::size_t r = 0;
            for (int d = 0; d < grid.dim(); ++d)
                r += strides[static_cast<std::size_t>(d)] *
                     static_cast<std::size_t>(reduced_index(idx[static_cast<std::size_t>(d)]));
            full.values[i] = reduced[r];
        }
        return full;
    }

    std::vector<double> restrict_field(const ScalarField& full) const {
        std::vector<double> out(size);
        for (std::size_t r = 0; r < size; ++r) {
            const Index3 idx = unflatten(r);
            Index3 f{0, 0, 0};
            for (int d = 0; d < grid.dim(); ++d)
                f[static_cast<std::size_t>(d)] = full_index(idx[static_cast<std::size_t>(d)]);
            out[r] = full.values[grid.flatten(f)];
        }
        return out;
    }
};

// Positive start vector: the discrete Dirichlet (or constant periodic) ground mode.
ScalarField ground_mode_guess(const Grid& g) {
    return ScalarField::sample(g, [&](const Point& x) {
        if (g.periodic()) return 1.0;
        double v = 1.0;
        const double span = 2.0 * g.half_width() + 2.0 * g.spacing();
        for (int d = 0; d < g.dim(); ++d)
            v *= std::sin(std::numbers::pi * (x[static_cast<std::size_t>(d)] + g.half_width() + g.spacing()) / span);
        return v;
    });
}

} // namespace

EigenState principal_eigenstate(const ScalarField& V, const EigenOptions& options, bool use_symmetry,
                                const ScalarField* guess) {
    const Grid& g = V.grid;
    require(V.all_finite(), "potential must be finite for the spectral test");
    ScalarField start = ground_mode_guess(g);
    if (guess != nullptr) {
        require(guess->grid == g, "eigenvector guess lives on another grid");
        const double peak = guess->max();
        bool positive = peak > 0.0;
        for (double v : guess->values) positive = positive && std::isfinite(v);
        if (positive)
            for (std::size_t i = 0; i < g.size(); ++i)
                start.values[i] = std::max(guess->values[i], 0.0) + 1e-3 * peak * start.values[i];
    }
    EigenState state{0.0, 0.0, ScalarField(g), 0, 0, false};
    EigenResult result;
    if (use_symmetry && g.points() >= 16 && mirror_symmetric(V)) {
        ReducedProblem problem(V);
        LinearOperator op = [&problem](std::span<const double> in, std::span<double> out) { problem.apply(in, out); };
        result = smallest_eigenpair(op, problem.restrict_field(start), problem.weights, options);
        state.u = problem.expand(result.vector);
        state.reduced = true;
    } else {
        LinearOperator op = [&](std::span<const double> in, std::span<double> out) {
            apply_laplacian(g, in, out);
            for (std::size_t i = 0; i < g.size(); ++i) out[i] = -out[i] - V.values[i] * in[i];
        };
        result = smallest_eigenpair(op, start.values, {}, options);
        state.u = ScalarField(g, result.vector);
    }
    if (!result.converged) throw NumericalError("inverse power iteration did not converge");
    if (!result.positive) throw NumericalError("principal eigenvector changed sign (discretization failure)");
    const double peak = state.u.max();
    for (double& v : state.u.values) v /= peak;
    state.lambda = result.eigenvalue;
    state.lower_bound = result.lower_bound;
    state.iterations = result.iterations;
    state.linear_iterations = result.linear_iterations;
    return state;
}

namespace {

int spec_dim(const PotentialSpec& spec) {
    if (const auto* e = std::get_if<potential::Explicit>(&spec.kind)) return e->V.grid.dim();
    if (const auto* f = std::get_if<potential::FromF>(&spec.kind)) return f->f.grid.dim();
    return 3;
}

// Prolongs an eigenfunction to a finer grid of the same box as a warm start.
ScalarField prolong(const ScalarField& coarse, const Grid& fine) {
    return ScalarField::sample(fine, [&](const Point& x) { return interpolate_at(coarse, x); });
}

} // namespace

SpectralReport form_bounded_test(const PotentialSpec& spec, const SpectralOptions& options) {
    require(options.points.size() >= 3, "spectral test needs at least 3 refinement levels");
    for (std::size_t i = 1; i < options.points.size(); ++i)
        require(options.points[i] > options.points[i - 1], "refinement levels must increase");
    require(options.b >= 0.0, "form bound constant b must be non-negative");
    const int dim = spec_dim(spec);
    SpectralReport report;
    report.b = options.b;
    std::vector<ScalarField> previous;  // eigenfunctions per slice on the previous level
    for (int points : options.points) {
        const Grid g = Grid::make(dim, options.half_width, points);
        const double horizon = spec.time_dependent() ? std::max(options.horizon, 2.0 * options.dt) : 0.0;
        const SpaceTimeField V = realize(spec, g, options.dt, horizon);
        SpectralLevel level;
        level.points = points;
        level.spacing = g.spacing();
        level.lambda_min = std::numeric_limits<double>::infinity();
        std::vector<EigenState> states(V.size(), EigenState{0.0, 0.0, ScalarField(g), 0, 0, false});
        parallel_for(V.size(), [&](std::size_t k) {
            std::optional<ScalarField> guess;
            if (k < previous.size()) guess = prolong(previous[k], g);
            states[k] = principal_eigenstate(V.slices[k], options.eigen, options.use_symmetry,
                                             guess ? &*guess : nullptr);
        });
        previous.clear();
        for (std::size_t k = 0; k < states.size(); ++k) {
            const EigenState& s = states[k];
            level.iterations += s.iterations;
            level.linear_iterations += s.linear_iterations;
            level.reduced = s.reduced;
            if (s.lambda < level.lambda_min) {
                level.lambda_min = s.lambda;
                level.lower_bound = s.lower_bound;
                level.worst_slice_time = V.time(k);
            }
            const double w = (states.size() > 1 && (k == 0 || k + 1 == states.size())) ? 0.5 : 1.0;
            level.time_average += w * s.lambda;
            previous.push_back(s.u);
        }
        level.time_average /= states.size() > 1 ? static_cast<double>(states.size() - 1) : 1.0;
        report.iterations += level.iterations;
        report.refinement_trace.push_back(level);
    }
    const auto& trace = report.refinement_trace;
    const SpectralLevel& fine = trace.back();
    const SpectralLevel& prev = trace[trace.size() - 2];
    report.lambda_min = fine.lambda_min;
    // The discrete spectral bottom of a form-bounded potential converges from
    // above; a decrease at the finest step means the form is escaping to -infinity.
    const double tol = 10.0 * options.eigen.tol * std::max(1.0, std::abs(fine.lambda_min));
    report.diverging = fine.lambda_min < prev.lambda_min - tol;
    report.form_bounded = !report.diverging && fine.lambda_min >= -options.b;
    return report;
}

GroundStateLog ground_state_log(const PotentialSpec& spec, const SpectralOptions& options) {
    require(!spec.time_dependent(), "ground-state log transform needs a time-independent potential");
    SpectralReport spectral = form_bounded_test(spec, options);
    if (!spectral.form_bounded)
        throw HypothesisError("hypothesis not met: potential is not form bounded (lambda_min = " +
                              std::to_string(spectral.lambda_min) + ")");
    const Grid g = Grid::make(spec_dim(spec), options.half_width, options.points.back());
    const ScalarField v = realize(spec, g, 1.0, 0.0).slices.front();
    GroundStateLog out{std::move(spectral), principal_eigenstate(v, options.eigen, options.use_symmetry), ScalarField(g)};
    for (std::size_t i = 0; i < g.size(); ++i) out.f.values[i] = -std::log(out.state.u.values[i]);
    const double mu = out.state.lambda + options.b;
    out.shift = -mu;
    ScalarField rec = laplacian(out.f);
    const ScalarField g2 = gradient(out.f).norm_squared();
    double worst = 0.0, sum = 0.0, vmax = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.radius(i) > 0.5 * g.half_width()) continue;
        rec.values[i] += -g2.values[i] + options.b - mu;
        const double diff = v.values[i] - rec.values[i];
        worst = std::max(worst, std::abs(diff));
        sum += diff * diff;
        vmax = std::max(vmax, std::abs(v.values[i] - options.b));
        ++count;
    }
    const double scale = std::max(1.0, vmax);
    out.identity_residual = worst / scale;
    out.identity_rms = std::sqrt(sum / static_cast<double>(std::max<std::size_t>(count, 1))) / scale;
    return out;
}

CorollaryReport corollary1_experiment(const PotentialSpec& spec, const std::function<double(const Point&)>& u0,
                                      const TruncationLadder& ladder, const CorollaryOptions& options) {
    require(ladder.upper.size() >= 3, "corollary experiment needs at least 3 upper truncation levels");
    SpectralReport spectral = form_bounded_test(spec, options.spectral);
    if (!spectral.form_bounded)
        throw HypothesisError("hypothesis not met: potential is not form bounded (lambda_min = " +
                              std::to_string(spectral.lambda_min) + ")");
    const Grid g = Grid::make(spec_dim(spec), options.spectral.half_width, options.points);
    const SpaceTimeField V = realize(spec, g, options.solver.dt, options.horizon);
    // Energy constant on the grid actually solved: b >= -lambda_min(V) >= -lambda_min(V_j).
    double lambda = std::numeric_limits<double>::infinity();
    for (const auto& slice : V.slices)
        lambda = std::min(lambda, principal_eigenstate(slice, options.spectral.eigen, options.spectral.use_symmetry).lambda);
    const double b = std::max(options.spectral.b, -lambda);

    const ScalarField init = ScalarField::sample(g, u0);
    for (double v : init.values) require(v >= 0.0, "initial data must be non-negative");
    std::vector<CauchySolution> solutions(ladder.upper.size(),
                                          CauchySolution{SpaceTimeField(g, 0.0, 1.0), V, init, options.solver, {}, 0, 0});
    parallel_for(ladder.upper.size(), [&](std::size_t j) {
        const SpaceTimeField Vj = truncate_below(truncate_above(V, ladder.upper[j]), options.lower_floor);
        solutions[j] = solve_cauchy(init, Vj, options.solver, options.horizon);
    });
    std::vector<CorollaryLevel> levels;
    for (std::size_t j = 0; j < solutions.size(); ++j) {
        const CauchySolution& sol = solutions[j];
        CorollaryLevel level;
        level.level = ladder.upper[j];
        const double l2_0 = sol.diagnostics.front().l2;
        for (const auto& d : sol.diagnostics)
            level.energy_ratio = std::max(level.energy_ratio, d.l2 / (l2_0 * std::exp(b * (d.time - options.solver.start_time))));
        level.probe_value = interpolate_at(sol.field.slices.back(), options.probe);
        if (level.energy_ratio > 1.0 + options.slack)
            throw NumericalError("energy bound violated at level " + std::to_string(level.level) +
                                 " (ratio " + std::to_string(level.energy_ratio) + "); dt too coarse");
        levels.push_back(level);
    }
    const auto& top = levels.back();
    const auto& below = levels[levels.size() - 2];
    const double growth = std::pow(top.probe_value / below.probe_value, 1.0 / std::log2(top.level / below.level)) - 1.0;

    ShellWindow window = options.window;
    if (window.r_out <= 0.0) {
        window.r_in = 4.0 * g.spacing();
        window.r_out = 0.5 * std::min(spec.support.radius, g.half_width());
    }
    return CorollaryReport{std::move(spectral), b, std::move(levels), growth, growth <= 0.10,
                           recover_f(solutions.back(), window), options.slack};
}

} // namespace shlab
