#include "shlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace shlab {

double gaussian_g_b(double r2, double tau, int dim, double b) {
    return std::pow(tau, -0.5 * dim) * std::exp(-b * r2 / tau);
}

std::vector<double> default_b_grid() {
    std::vector<double> grid;
    for (int k = -16; k <= 8; ++k) grid.push_back(std::exp2(0.25 * k));
    return grid;
}

std::vector<Probe> collect_probes(const KernelEstimate& est) {
    const SpaceTimeField& col = est.top();
    const Grid& g = col.grid;
    std::vector<Probe> probes;
    for (std::size_t k = 0; k < col.size(); ++k) {
        const double tau = col.time(k) - est.source_time;
        if (tau < est.t_min * (1.0 - 1e-12)) continue;
        const ScalarField& slice = col.slices[k];
        const double floor = 1e-6 * slice.max();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!in_probe_region(g, i, est.source) || slice.values[i] < floor) continue;
            const Point x = g.position(i);
            double r2 = 0.0;
            for (int d = 0; d < g.dim(); ++d) {
                const double diff = x[static_cast<std::size_t>(d)] - est.source[static_cast<std::size_t>(d)];
                r2 += diff * diff;
            }
            probes.push_back(Probe{i, col.time(k), tau, r2, slice.values[i]});
        }
    }
    return probes;
}

namespace {

void require_converged(const KernelEstimate& est) {
    if (!est.converged)
        throw NumericalError(est.divergent ? "ladder divergence: kernel estimate grows without saturation"
                                           : "kernel estimate has not converged along the ladder");
}

void fill_metadata(BoundFit& fit, const KernelEstimate& est, std::size_t count) {
    fit.probe_count = count;
    fit.t_min = est.t_min;
    fit.probe_radius = 0.5 * est.top().grid.half_width();
}

double mean_gap(const std::vector<Probe>& probes, int dim, double b, double c) {
    double total = 0.0;
    for (const Probe& p : probes) total += std::abs(std::log(p.value / (c * gaussian_g_b(p.r2, p.tau, dim, b))));
    return probes.empty() ? 0.0 : total / static_cast<double>(probes.size());
}

} // namespace

BoundFit fit_gaussian_upper(const KernelEstimate& est, const std::vector<double>& b_grid) {
    require_converged(est);
    require(!b_grid.empty(), "b grid is empty");
    const int dim = est.top().grid.dim();
    const std::vector<Probe> probes = collect_probes(est);
    require(!probes.empty(), "no probes satisfy the probe filter");
    BoundFit best;
    best.side = BoundSide::upper;
    double best_mass = std::numeric_limits<double>::infinity();
    for (double b : b_grid) {
        double c = 0.0;
        for (const Probe& p : probes) c = std::max(c, p.value / gaussian_g_b(p.r2, p.tau, dim, b));
        // Mass of c g_b at a fixed time: c (pi / b)^{n/2}.
        const double mass = c * std::pow(std::numbers::pi / b, 0.5 * dim);
        if (std::isfinite(c) && mass < best_mass) {
            best_mass = mass;
            best.b = b;
            best.c = c;
        }
    }
    best.admissible = std::isfinite(best_mass) && best.c > 0.0;
    fill_metadata(best, est, probes.size());
    best.residual = best.admissible ? fit_residual(best, est) : std::numeric_limits<double>::infinity();
    best.mean_log_gap = mean_gap(probes, dim, best.b, best.c);
    return best;
}

BoundFit fit_gaussian_lower(const KernelEstimate& est, double kappa, const std::vector<double>& b_grid) {
    require_converged(est);
    require(kappa > 0.0, "lower-bound window kappa must be positive");
    require(!b_grid.empty(), "b grid is empty");
    const SpaceTimeField& col = est.top();
    const Grid& g = col.grid;
    const int dim = g.dim();
    std::vector<Probe> window;
    for (std::size_t k = 0; k < col.size(); ++k) {
        const double tau = col.time(k) - est.source_time;
        if (tau < est.t_min * (1.0 - 1e-12)) continue;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!in_probe_region(g, i, est.source)) continue;
            const Point x = g.position(i);
            double r2 = 0.0;
            for (int d = 0; d < dim; ++d) {
                const double diff = x[static_cast<std::size_t>(d)] - est.source[static_cast<std::size_t>(d)];
                r2 += diff * diff;
            }
            if (r2 > kappa * tau) continue;
            const double v = col.slices[k].values[i];
            if (!(v > 0.0))
                throw NumericalError("kernel column is not positive inside the lower-bound window");
            window.push_back(Probe{i, col.time(k), tau, r2, v});
        }
    }
    require(!window.empty(), "lower-bound window contains no probes");
    BoundFit best;
    best.side = BoundSide::lower;
    best.window = kappa;
    double best_spread = std::numeric_limits<double>::infinity();
    for (double b : b_grid) {
        double c = std::numeric_limits<double>::infinity();
        for (const Probe& p : window) c = std::min(c, p.value / gaussian_g_b(p.r2, p.tau, dim, b));
        // Tightest envelope: smallest worst-case gap above c g_b.
        double spread = 0.0;
        for (const Probe& p : window)
            spread = std::max(spread, std::log(p.value / (c * gaussian_g_b(p.r2, p.tau, dim, b))));
        if (spread < best_spread) {
            best_spread = spread;
            best.b = b;
            best.c = c;
        }
    }
    best.admissible = best.c > 0.0 && std::isfinite(best.c);
    fill_metadata(best, est, window.size());
    best.residual = best.admissible ? fit_residual(best, est) : std::numeric_limits<double>::infinity();
    best.mean_log_gap = mean_gap(window, dim, best.b, best.c);
    return best;
}

double fit_residual(const BoundFit& fit, const KernelEstimate& est) {
    const int dim = est.top().grid.dim();
    double worst = -std::numeric_limits<double>::infinity();
    for (const Probe& p : collect_probes(est)) {
        if (fit.side == BoundSide::lower && p.r2 > fit.window * p.tau) continue;
        const double ratio = std::log(p.value / (fit.c * gaussian_g_b(p.r2, p.tau, dim, fit.b)));
        worst = std::max(worst, fit.side == BoundSide::upper ? ratio : -ratio);
    }
    return worst;
}

std::vector<std::pair<double, double>> on_diagonal_profile(const KernelEstimate& est) {
    const SpaceTimeField& col = est.top();
    const int dim = col.grid.dim();
    std::vector<std::pair<double, double>> series;
    for (std::size_t k = 0; k < col.size(); ++k) {
        const double tau = col.time(k) - est.source_time;
        if (tau < est.t_min * (1.0 - 1e-12)) continue;
        series.emplace_back(tau, std::pow(tau, 0.5 * dim) * interpolate_at(col.slices[k], est.source));
    }
    return series;
}

SourceLattice make_source_lattice(const Grid& grid, int stride, double radius) {
    require(stride >= 1, "lattice stride must be at least 1");
    require(radius > 0.0, "lattice radius must be positive");
    SourceLattice lattice;
    lattice.spacing = grid.spacing() * stride;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Index3 idx = grid.unflatten(i);
        const Point x = grid.position(i);
        bool keep = true;
        for (int d = 0; d < grid.dim(); ++d) {
            const auto du = static_cast<std::size_t>(d);
            // Keep the lattice symmetric about the node nearest the origin.
            const int centre = grid.points() / 2;
            keep = keep && (idx[du] - centre) % stride == 0 && std::abs(x[du]) <= radius + 1e-12;
        }
        if (keep) lattice.points.push_back(x);
    }
    require(!lattice.points.empty(), "source lattice is empty");
    return lattice;
}

double operator_ratio(const std::vector<KernelEstimate>& ensemble, const SourceLattice& lattice, std::size_t node,
                      std::size_t slice, const std::vector<double>& phi, double alpha) {
    require(alpha > 1.0, "alpha must exceed 1");
    require(phi.size() == lattice.points.size() && ensemble.size() == lattice.points.size(),
            "test function and ensemble must match the source lattice");
    const int dim = ensemble.front().top().grid.dim();
    const double w = std::pow(lattice.spacing, dim);
    const double q = alpha / (alpha - 1.0);
    double integral = 0.0, norm = 0.0;
    for (std::size_t m = 0; m < phi.size(); ++m) {
        if (phi[m] == 0.0) continue;
        integral += ensemble[m].top().slices[slice].values[node] * phi[m] * w;
        norm += std::pow(std::abs(phi[m]), q) * w;
    }
    if (norm == 0.0) return 0.0;
    return std::abs(integral) / std::pow(norm, 1.0 / q);
}

OperatorNormReport operator_norm_diag(const std::vector<KernelEstimate>& ensemble, const SourceLattice& lattice,
                                      double alpha) {
    require(alpha > 1.0, "alpha must exceed 1");
    require(!ensemble.empty() && ensemble.size() == lattice.points.size(), "ensemble must cover the source lattice");
    const KernelEstimate& first = ensemble.front();
    const SpaceTimeField& col = first.top();
    const Grid& g = col.grid;
    const int dim = g.dim();
    if (lattice.spacing > std::sqrt(2.0 * first.t_min) + 1e-12)
        throw ValidationError("source lattice too sparse to resolve the kernel at t_min (quadrature flag)");
    double radius = 0.0;
    for (const Point& p : lattice.points)
        for (int d = 0; d < dim; ++d) radius = std::max(radius, std::abs(p[static_cast<std::size_t>(d)]));

    OperatorNormReport report;
    report.alpha = alpha;
    const double exponent = (alpha - 1.0) * dim / (2.0 * alpha);
    const int max_half = std::max(0, static_cast<int>(std::floor(radius / lattice.spacing)));
    for (std::size_t k = 0; k < col.size(); ++k) {
        const double tau = col.time(k) - first.source_time;
        if (tau < first.t_min * (1.0 - 1e-12)) continue;
        double best = 0.0;
        for (const Point& x : lattice.points) {
            bool inner = true;
            for (int d = 0; d < dim; ++d) inner = inner && std::abs(x[static_cast<std::size_t>(d)]) <= 0.5 * radius + 1e-12;
            if (!inner) continue;
            std::size_t node = 0;
            {
                Index3 idx{0, 0, 0};
                for (int d = 0; d < dim; ++d)
                    idx[static_cast<std::size_t>(d)] = static_cast<int>(
                        std::lround((x[static_cast<std::size_t>(d)] + g.half_width()) / g.spacing()));
                node = g.flatten(idx);
            }
            for (int half = 0; half <= max_half; ++half) {
                std::vector<double> phi(lattice.points.size(), 0.0);
                const double reach = (half + 0.5) * lattice.spacing;
                for (std::size_t m = 0; m < phi.size(); ++m) {
                    bool in = true;
                    for (int d = 0; d < dim; ++d) {
                        const auto du = static_cast<std::size_t>(d);
                        in = in && std::abs(lattice.points[m][du] - x[du]) < reach;
                    }
                    if (in) phi[m] = 1.0;
                }
                best = std::max(best, operator_ratio(ensemble, lattice, node, k, phi, alpha));
                ++report.dictionary_size;
            }
        }
        report.per_lag.emplace_back(tau, best);
        report.constant = std::max(report.constant, best * std::pow(tau, exponent));
    }
    return report;
}

double operator_norm_reference(int dim, double alpha, double s0) {
    require(alpha > 1.0 && s0 >= 1.0, "reference needs alpha > 1 and s0 >= 1");
    return std::pow(s0, 1.0 / alpha) * std::pow(4.0 * std::numbers::pi, -dim * (alpha - 1.0) / (2.0 * alpha));
}

EntropyTrace nash_entropy_trace(const KernelEstimate& est, const SpaceTimeField& V) {
    require_converged(est);
    const SpaceTimeField& col = est.top();
    const Grid& g = col.grid;
    require(V.grid == g, "potential must live on the kernel grid");
    std::vector<double> weight(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double r = g.radius(i);
        if (r <= 4.0) weight[i] = g.quadrature_weight(i) * std::exp(-std::numbers::pi * r * r);
    }
    EntropyTrace trace(g);
    // m = -(G0 * V) at the column's recorded times.
    SpaceTimeField m = time_convolve(V, probability_kernel(), col.t0, col.dt, col.size(), 0.0625 * g.spacing() * g.spacing());
    for (auto& slice : m.slices)
        for (double& v : slice.values) v = -v;
    for (std::size_t k = 0; k < col.size(); ++k) {
        const double tau = col.time(k) - est.source_time;
        if (tau < est.t_min * (1.0 - 1e-12)) continue;
        double H = 0.0, M = 0.0;
        std::size_t bad = 0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (weight[i] == 0.0) continue;
            const double u = col.slices[k].values[i];
            if (u <= 0.0) ++bad;
            else H += weight[i] * std::log(u);
            M += weight[i] * m.slices[k].values[i];
        }
        trace.s.push_back(col.time(k));
        trace.H.push_back(bad ? std::numeric_limits<double>::quiet_NaN() : H);
        trace.M.push_back(M);
        trace.nonpositive.push_back(bad);
    }
    trace.m_field = std::move(m);
    return trace;
}

std::string to_string(BoundSide side) { return side == BoundSide::upper ? "upper" : "lower"; }

} // namespace shlab
