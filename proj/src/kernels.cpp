#include "shlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "shlab/parallel.hpp"

namespace shlab {

bool in_probe_region(const Grid& grid, std::size_t node, const Point& y) {
    const Point x = grid.position(node);
    double r2 = 0.0;
    for (int d = 0; d < grid.dim(); ++d) {
        const double diff = x[static_cast<std::size_t>(d)] - y[static_cast<std::size_t>(d)];
        r2 += diff * diff;
    }
    const double limit = 0.5 * grid.half_width();
    return r2 <= limit * limit;
}

namespace {

void check_config(const KernelConfig& config) {
    require(config.horizon > 0.0, "kernel horizon must be positive");
    require(config.lower_floor > 0.0, "lower truncation floor must be positive");
    require(config.gap_tolerance > 0.0, "gap tolerance must be positive");
}

std::size_t first_probe_slice(const SpaceTimeField& column, double t_min) {
    std::size_t k = 0;
    while (k < column.size() && column.time(k) - column.t0 < t_min * (1.0 - 1e-12)) ++k;
    return k;
}

SpaceTimeField solve_level(const ScalarField& u0, const SpaceTimeField& V, double level, double floor,
                           const SolverConfig& solver, double horizon) {
    SpaceTimeField Vj = truncate_below(truncate_above(V, level), floor);
    return solve_cauchy(u0, Vj, solver, horizon).field;
}

} // namespace

KernelEstimate estimate_kernel(const PotentialSpec& spec, const Point& y, double s, const TruncationLadder& ladder,
                               const Grid& grid, const KernelConfig& config) {
    check_config(config);
    require(ladder.upper.size() >= 3, "kernel estimation needs at least 3 upper truncation levels");
    require(grid.contains(y), "kernel source lies outside the grid box");
    SolverConfig solver = config.solver;
    solver.start_time = s;
    const SpaceTimeField V = realize(spec, grid, solver.dt, s + config.horizon);
    const double v_max = [&] {
        double m = -std::numeric_limits<double>::infinity();
        for (const auto& slice : V.slices) m = std::max(m, slice.max());
        return m;
    }();
    const ScalarField u0 = discrete_delta(grid, y);

    KernelEstimate est;
    est.source = y;
    est.source_time = s;
    est.ladder = ladder;
    est.t_min = 4.0 * solver.dt;
    const std::size_t levels = ladder.upper.size();
    est.columns.assign(levels, SpaceTimeField(grid, s, solver.dt));
    parallel_for(levels, [&](std::size_t j) {
        est.columns[j] = solve_level(u0, V, ladder.upper[j], config.lower_floor, solver, config.horizon);
    });

    const std::size_t k0 = first_probe_slice(est.columns.front(), est.t_min);
    require(k0 < est.columns.front().size(), "horizon is shorter than t_min = 4 dt");
    double worst = 0.0;
    for (std::size_t j = 0; j < levels; ++j) {
        est.saturated.push_back(ladder.upper[j] >= v_max);
        est.on_diagonal.push_back(interpolate_at(est.columns[j].slices.back(), y));
        if (j == 0) continue;
        const SpaceTimeField& lo = est.columns[j - 1];
        const SpaceTimeField& hi = est.columns[j];
        double scale = 0.0, gap = 0.0, dip = 0.0;
        for (std::size_t k = k0; k < hi.size(); ++k) {
            const auto& a = lo.slices[k].values;
            const auto& b = hi.slices[k].values;
            for (std::size_t i = 0; i < a.size(); ++i) {
                scale = std::max(scale, std::abs(b[i]));
                gap = std::max(gap, std::abs(b[i] - a[i]));
                dip = std::min(dip, b[i] - a[i]);
            }
        }
        est.gaps.push_back(scale > 0.0 ? gap / scale : 0.0);
        if (scale > 0.0) worst = std::min(worst, dip / scale);
        const double octaves = std::log2(ladder.upper[j] / ladder.upper[j - 1]);
        const double ratio = est.on_diagonal[j] / est.on_diagonal[j - 1];
        est.octave_growth.push_back(std::pow(ratio, 1.0 / octaves) - 1.0);
    }
    est.worst_monotonicity = worst;
    if (worst < -1e-8)
        throw NumericalError("kernel columns decrease along the truncation ladder (relative dip " +
                             std::to_string(worst) + ")");
    est.cauchy_gap = est.gaps.back();
    est.divergent = est.octave_growth.back() > config.divergence_growth;
    est.converged = !est.divergent && est.cauchy_gap < config.gap_tolerance;
    return est;
}

ScalarField mass_from_ones(const PotentialSpec& spec, double s, double t, const Grid& grid,
                           const TruncationLadder& ladder, const KernelConfig& config) {
    check_config(config);
    require(t > s, "mass integral needs t > s");
    require(!ladder.upper.empty(), "ladder has no upper levels");
    SolverConfig solver = config.solver;
    solver.start_time = s;
    const double horizon = t - s;
    solver.record_every = std::max<long>(1, std::llround(horizon / solver.dt));
    const SpaceTimeField V = realize(spec, grid, solver.dt, t);
    return solve_level(ScalarField(grid, 1.0), V, ladder.upper.back(), config.lower_floor, solver, horizon)
        .slices.back();
}

FeynmanKacReport feynman_kac_check(const PotentialSpec& spec, double p, const std::vector<Point>& sources,
                                   const Grid& grid, const TruncationLadder& ladder, const KernelConfig& config,
                                   double slack) {
    require(p > 1.0, "Feynman-Kac exponent p must exceed 1");
    require(!sources.empty(), "Feynman-Kac check needs at least one source");
    PotentialSpec free_spec;
    free_spec.kind = potential::Constant{0.0};
    struct Counts {
        std::size_t probes = 0, violations = 0;
        double worst = 0.0;
    };
    std::vector<Counts> counts(sources.size());
    for (std::size_t n = 0; n < sources.size(); ++n) {
        const Point& y = sources[n];
        KernelEstimate gv = estimate_kernel(spec, y, 0.0, ladder, grid, config);
        KernelEstimate gp = estimate_kernel(spec.scaled(p), y, 0.0, ladder, grid, config);
        KernelEstimate g0 = estimate_kernel(free_spec, y, 0.0, ladder, grid, config);
        if (!gv.converged || !gp.converged)
            throw NumericalError("Feynman-Kac check needs converged kernel estimates");
        const SpaceTimeField& a = gv.top();
        const SpaceTimeField& b = gp.top();
        const SpaceTimeField& c = g0.top();
        Counts& out = counts[n];
        for (std::size_t k = first_probe_slice(a, gv.t_min); k < a.size(); ++k) {
            const double floor = 1e-6 * c.slices[k].max();
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (!in_probe_region(grid, i, y) || c.slices[k].values[i] <= floor) continue;
                const double bound = std::pow(std::max(b.slices[k].values[i], 0.0), 1.0 / p) *
                                     std::pow(c.slices[k].values[i], (p - 1.0) / p);
                const double ratio = bound > 0.0 ? a.slices[k].values[i] / bound
                                                 : std::numeric_limits<double>::infinity();
                ++out.probes;
                if (ratio > 1.0 + slack) ++out.violations;
                out.worst = std::max(out.worst, ratio);
            }
        }
    }
    FeynmanKacReport report;
    report.p = p;
    report.slack = slack;
    for (const auto& c : counts) {
        report.probes += c.probes;
        report.violations += c.violations;
        report.worst_ratio = std::max(report.worst_ratio, c.worst);
    }
    report.violation_fraction =
        report.probes ? static_cast<double>(report.violations) / static_cast<double>(report.probes) : 0.0;
    return report;
}

void write_kernel_csv(const KernelEstimate& est, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write kernel CSV to " + path);
    const Grid& g = est.columns.front().grid;
    out << "x,t";
    for (double j : est.ladder.upper) out << ",level_" << j;
    out << "\n" << std::setprecision(12);
    // Line through the source node parallel to axis 0.
    Index3 anchor{0, 0, 0};
    for (int d = 1; d < g.dim(); ++d) {
        const double s = (est.source[static_cast<std::size_t>(d)] + g.half_width()) / g.spacing();
        anchor[static_cast<std::size_t>(d)] = std::clamp(static_cast<int>(std::lround(s)), 0, g.points() - 1);
    }
    const SpaceTimeField& first = est.columns.front();
    for (std::size_t k = 0; k < first.size(); ++k) {
        for (int i = 0; i < g.points(); ++i) {
            Index3 idx = anchor;
            idx[0] = i;
            const std::size_t node = g.flatten(idx);
            out << g.coordinate(i) << "," << first.time(k);
            for (const auto& col : est.columns) out << "," << col.slices[k].values[node];
            out << "\n";
        }
    }
}

} // namespace shlab
