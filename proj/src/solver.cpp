#include "shlab/solver.hpp"

#include <algorithm>
#include <cmath>

#include "shlab/heat.hpp"

namespace shlab {

namespace {

struct Diffusion {
    const Grid& grid;
    Scheme scheme;
    double tol;
    int max_iters;
    std::vector<double> work, sum;
    int iterations = 0;

    Diffusion(const Grid& g, Scheme s, double t, int m)
        : grid(g), scheme(s), tol(t), max_iters(m), work(g.size()), sum(g.size()) {}

    // Solves (I - c Lap) x = rhs. The diagonal is 1 + 2nc/h^2 and the
    // neighbour coupling c/h^2, so Jacobi contracts in the max norm by
    // rho = (2nc/h^2) / (1 + 2nc/h^2); starting from zero its iterates
    // increase monotonically to x for rhs >= 0.
    void implicit_solve(double c, std::span<const double> rhs, std::vector<double>& x) {
        const double h2 = grid.spacing() * grid.spacing();
        const double off = c / h2;
        const double diag = 1.0 + 2.0 * grid.dim() * off;
        const double rho = (diag - 1.0) / diag;
        int sweeps = 1;
        if (rho > 0.0) sweeps = static_cast<int>(std::ceil(std::log(tol) / std::log(rho))) + 1;
        if (sweeps > max_iters)
            throw NumericalError("diffusion solve needs " + std::to_string(sweeps) +
                                 " sweeps, above max_linear_iters");
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rhs[i] / diag;
        for (int k = 1; k < sweeps; ++k) {
            neighbor_sum(grid, x, sum);
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = (rhs[i] + off * sum[i]) / diag;
        }
        iterations += sweeps;
    }

    void substep(double dt, std::vector<double>& u, Scheme s) {
        if (s == Scheme::backward_euler) {
            work = u;
            implicit_solve(dt, work, u);
            return;
        }
        const double h2 = grid.spacing() * grid.spacing();
        const double c = 0.5 * dt;
        neighbor_sum(grid, u, sum);
        const double centre = 1.0 - 2.0 * grid.dim() * c / h2;
        for (std::size_t i = 0; i < u.size(); ++i) work[i] = centre * u[i] + (c / h2) * sum[i];
        implicit_solve(c, work, u);
    }

    // Returns true when the CN result had to be replaced by backward Euler.
    bool step(double dt, std::vector<double>& u) {
        const double h2 = grid.spacing() * grid.spacing();
        const int m = std::max(1, static_cast<int>(std::ceil(dt * grid.dim() / h2 * (1.0 - 1e-12))));
        const double sub = dt / m;
        std::vector<double> saved;
        if (scheme == Scheme::crank_nicolson_strang) saved = u;
        for (int k = 0; k < m; ++k) substep(sub, u, scheme);
        if (scheme != Scheme::crank_nicolson_strang) return false;
        const bool nonnegative_input = std::all_of(saved.begin(), saved.end(), [](double v) { return v >= 0.0; });
        if (!nonnegative_input || std::all_of(u.begin(), u.end(), [](double v) { return v >= 0.0; })) return false;
        u = saved;
        for (int k = 0; k < m; ++k) substep(sub, u, Scheme::backward_euler);
        return true;
    }
};

void potential_factor(const ScalarField& V, double half_dt, std::vector<double>& out) {
    out.resize(V.size());
    for (std::size_t i = 0; i < V.size(); ++i) out[i] = std::exp(V.values[i] * half_dt);
}

StepDiagnostics measure(double t, const std::vector<double>& weights, const std::vector<double>& u) {
    StepDiagnostics d;
    d.time = t;
    d.min = u.empty() ? 0.0 : u.front();
    d.max = d.min;
    double l1 = 0.0, l2 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        l1 += weights[i] * std::abs(u[i]);
        l2 += weights[i] * u[i] * u[i];
        d.min = std::min(d.min, u[i]);
        d.max = std::max(d.max, u[i]);
    }
    d.l1 = l1;
    d.l2 = std::sqrt(l2);
    return d;
}

} // namespace

CauchySolution solve_cauchy(const ScalarField& u0, const SpaceTimeField& V, const SolverConfig& config,
                            double horizon) {
    require(config.dt > 0.0, "time step must be positive");
    require(config.linear_tol > 0.0 && config.linear_tol < 1.0, "linear tolerance must lie in (0, 1)");
    require(config.max_linear_iters > 0, "max_linear_iters must be positive");
    require(config.record_every >= 1, "record_every must be at least 1");
    require(horizon > 0.0, "horizon must be positive");
    require(u0.all_finite(), "initial data must be finite");
    require(V.grid == u0.grid, "potential and initial data must share one grid");
    require(!V.slices.empty() && V.all_finite(), "potential must be finite (truncate singular potentials first)");
    const double steps_real = horizon / config.dt;
    const auto steps = static_cast<long>(std::llround(steps_real));
    require(steps >= 1 && std::abs(steps_real - static_cast<double>(steps)) <= 1e-8 * std::max(1.0, steps_real),
            "horizon must be a whole number of time steps");
    require(steps % config.record_every == 0, "step count must be a multiple of record_every");

    const Grid& g = u0.grid;
    const double dt = config.dt;
    const double t0 = config.start_time;
    CauchySolution sol{SpaceTimeField(g, t0, dt * config.record_every), V, u0, config, {}, 0, 0};
    sol.field.push_back(u0);
    std::vector<double> u = u0.values;
    std::vector<double> weights(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) weights[i] = g.quadrature_weight(i);
    sol.diagnostics.push_back(measure(t0, weights, u));

    Diffusion diffusion(g, config.scheme, config.linear_tol, config.max_linear_iters);
    std::vector<double> first, second;
    if (V.is_static()) {
        potential_factor(V.slices.front(), 0.5 * dt, first);
        second = first;
    }
    for (long n = 0; n < steps; ++n) {
        const double ta = t0 + dt * static_cast<double>(n);
        const double tb = ta + dt;
        if (!V.is_static()) {
            potential_factor(V.interpolate(ta), 0.5 * dt, first);
            potential_factor(V.interpolate(tb), 0.5 * dt, second);
        }
        for (std::size_t i = 0; i < u.size(); ++i) u[i] *= first[i];
        if (diffusion.step(dt, u)) ++sol.fallback_steps;
        for (std::size_t i = 0; i < u.size(); ++i) u[i] *= second[i];
        StepDiagnostics d = measure(tb, weights, u);
        if (!std::isfinite(d.l2)) throw NumericalError("solution overflowed at t = " + std::to_string(tb));
        sol.diagnostics.push_back(d);
        if ((n + 1) % config.record_every == 0) sol.field.push_back(ScalarField(g, u));
    }
    sol.linear_iterations = diffusion.iterations;
    return sol;
}

double duhamel_residual(const CauchySolution& sol) {
    const SpaceTimeField& u = sol.field;
    const Grid& g = u.grid;
    require(u.size() >= 3, "Duhamel check needs at least three recorded slices");
    // Source term V u on the recorded slices.
    SpaceTimeField source(g, u.t0, u.dt);
    for (std::size_t k = 0; k < u.size(); ++k) {
        ScalarField vu = sol.potential.interpolate(u.time(k));
        for (std::size_t i = 0; i < g.size(); ++i) vu.values[i] *= u.slices[k].values[i];
        source.push_back(std::move(vu));
    }
    const double h = g.spacing();
    const std::size_t last = u.size() - 1;
    const std::size_t mid = last / 2;
    double worst = 0.0;
    for (std::size_t k : {mid, last}) {
        const double t = u.time(k);
        ScalarField rhs = apply_free_heat(sol.initial, t - u.t0);
        SpaceTimeField duhamel = time_convolve(source, probability_kernel(), t, 1.0, 1, 0.0625 * h * h);
        const ScalarField& lhs = u.slices[k];
        double scale = 0.0, mismatch = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.radius(i) > 0.5 * g.half_width()) continue;
            const double r = rhs.values[i] + duhamel.slices.front().values[i];
            scale = std::max(scale, std::abs(lhs.values[i]));
            mismatch = std::max(mismatch, std::abs(lhs.values[i] - r));
        }
        if (scale > 0.0) worst = std::max(worst, mismatch / scale);
    }
    return worst;
}

OrderingReport compare_solutions(const CauchySolution& a, const CauchySolution& b) {
    require(a.field.grid == b.field.grid, "solutions live on different grids");
    require(a.field.size() == b.field.size() && a.field.dt == b.field.dt && a.field.t0 == b.field.t0,
            "solutions use different time discretizations");
    require(a.initial.values == b.initial.values, "solutions start from different initial data");
    double scale = 0.0;
    for (std::size_t k = 0; k < a.field.size(); ++k)
        scale = std::max({scale, a.field.slices[k].max_abs(), b.field.slices[k].max_abs()});
    OrderingReport report;
    report.tolerance = -1e-8 * scale;
    bool a_geq = true, b_geq = true;
    for (std::size_t k = 0; k < a.field.size(); ++k) {
        const auto& av = a.field.slices[k].values;
        const auto& bv = b.field.slices[k].values;
        double ab = std::numeric_limits<double>::infinity(), ba = ab;
        for (std::size_t i = 0; i < av.size(); ++i) {
            ab = std::min(ab, av[i] - bv[i]);
            ba = std::min(ba, bv[i] - av[i]);
        }
        report.min_a_minus_b.push_back(ab);
        report.min_b_minus_a.push_back(ba);
        a_geq = a_geq && ab >= report.tolerance;
        b_geq = b_geq && ba >= report.tolerance;
    }
    report.verdict = a_geq && b_geq ? Ordering::equal
                     : a_geq        ? Ordering::a_geq_b
                     : b_geq        ? Ordering::b_geq_a
                                    : Ordering::incomparable;
    return report;
}

std::string to_string(Ordering ordering) {
    switch (ordering) {
    case Ordering::a_geq_b: return "a>=b";
    case Ordering::b_geq_a: return "b>=a";
    case Ordering::equal: return "equal";
    default: return "incomparable";
    }
}

std::string to_string(Scheme scheme) {
    return scheme == Scheme::backward_euler ? "backward_euler" : "crank_nicolson_strang";
}

Scheme parse_scheme(const std::string& name) {
    if (name == "crank_nicolson_strang") return Scheme::crank_nicolson_strang;
    if (name == "backward_euler") return Scheme::backward_euler;
    throw ValidationError("unknown scheme '" + name + "'");
}

} // namespace shlab
