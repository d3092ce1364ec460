#include "shlab/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace shlab {

double free_kernel_eval(const Point& x, double t, const Point& y, double s, int dim,
                        KernelNormalization normalization, double b) {
    require(t > s, "kernel evaluation needs t > s");
    require(dim >= 1 && dim <= 3, "dimension must be 1, 2 or 3");
    const double tau = t - s;
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double diff = x[static_cast<std::size_t>(d)] - y[static_cast<std::size_t>(d)];
        r2 += diff * diff;
    }
    if (normalization == KernelNormalization::probability)
        return std::pow(4.0 * std::numbers::pi * tau, -0.5 * dim) * std::exp(-r2 / (4.0 * tau));
    require(b > 0.0, "Gaussian parameter b must be positive");
    return std::pow(tau, -0.5 * dim) * std::exp(-b * r2 / tau);
}

namespace {

// Weights for offsets -(n-1) .. n-1 (dirichlet) or folded onto 0 .. n-1 (periodic).
std::vector<double> axis_weights(const Grid& g, double variance) {
    const int n = g.points();
    const double h = g.spacing();
    const double scale = std::sqrt(2.0 * variance);
    auto cell_mass = [&](long k) {
        return 0.5 * (std::erf((static_cast<double>(k) + 0.5) * h / scale) -
                      std::erf((static_cast<double>(k) - 0.5) * h / scale));
    };
    if (!g.periodic()) {
        std::vector<double> w(static_cast<std::size_t>(2 * n - 1), 0.0);
        for (long k = -(n - 1); k <= n - 1; ++k) w[static_cast<std::size_t>(k + n - 1)] = cell_mass(k);
        return w;
    }
    std::vector<double> w(static_cast<std::size_t>(n), 0.0);
    const long reach = static_cast<long>(std::ceil(12.0 * std::sqrt(variance) / h)) + 1;
    for (long k = -reach; k <= reach; ++k) {
        long j = ((k % n) + n) % n;
        w[static_cast<std::size_t>(j)] += cell_mass(k);
    }
    return w;
}

void smooth_axis(const Grid& g, int axis, const std::vector<double>& w, std::vector<double>& data) {
    const int n = g.points();
    const std::size_t s = g.stride(axis);
    const std::size_t line = s * static_cast<std::size_t>(n);
    const std::size_t total = g.size();
    const bool periodic = g.periodic();
    // Dirichlet weights are negligible beyond this reach; skipping them keeps narrow kernels cheap.
    int reach = n - 1;
    if (!periodic) {
        while (reach > 0 && w[static_cast<std::size_t>(reach + n - 1)] < 1e-300) --reach;
    }
    std::vector<double> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    for (std::size_t base = 0; base < total; base += line) {
        for (std::size_t off = 0; off < s; ++off) {
            const std::size_t first = base + off;
            for (int k = 0; k < n; ++k) in[static_cast<std::size_t>(k)] = data[first + s * static_cast<std::size_t>(k)];
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                if (periodic) {
                    for (int k = 0; k < n; ++k) {
                        int j = (k - i + n) % n;
                        acc += w[static_cast<std::size_t>(j)] * in[static_cast<std::size_t>(k)];
                    }
                } else {
                    const int lo = std::max(0, i - reach), hi = std::min(n - 1, i + reach);
                    for (int k = lo; k <= hi; ++k) acc += w[static_cast<std::size_t>(k - i + n - 1)] * in[static_cast<std::size_t>(k)];
                }
                out[static_cast<std::size_t>(i)] = acc;
            }
            for (int k = 0; k < n; ++k) data[first + s * static_cast<std::size_t>(k)] = out[static_cast<std::size_t>(k)];
        }
    }
}

} // namespace

ScalarField gaussian_smooth(const ScalarField& field, double variance) {
    require(variance >= 0.0, "smoothing variance must be non-negative");
    if (variance == 0.0) return field;
    const Grid& g = field.grid;
    const std::vector<double> w = axis_weights(g, variance);
    ScalarField out = field;
    for (int axis = 0; axis < g.dim(); ++axis) smooth_axis(g, axis, w, out.values);
    return out;
}

ScalarField apply_free_heat(const ScalarField& field, double tau) {
    require(tau >= 0.0, "heat time must be non-negative");
    return gaussian_smooth(field, 2.0 * tau);
}

HeatKernelSpec probability_kernel() { return HeatKernelSpec{1.0, 2.0}; }

HeatKernelSpec g_b_kernel(int dim, double b) {
    require(b > 0.0, "Gaussian parameter b must be positive");
    return HeatKernelSpec{std::pow(std::numbers::pi / b, 0.5 * dim), 1.0 / (2.0 * b)};
}

namespace {

void axpy(std::vector<double>& acc, double a, const std::vector<double>& x) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += a * x[i];
}

// Lag mesh 0, tau_min, 2 tau_min, 4 tau_min, ... capped at panel width cap, ending at span.
std::vector<double> lag_mesh(double span, double tau_min, double cap) {
    std::vector<double> mesh{0.0};
    if (span <= 0.0) return mesh;
    double next = std::min(tau_min, span);
    while (true) {
        mesh.push_back(next);
        if (next >= span) break;
        double step = std::min(next, cap);
        next = std::min(next + step, span);
        if (span - next < 1e-12 * span) next = span;
    }
    return mesh;
}

} // namespace

SpaceTimeField time_convolve(const SpaceTimeField& input, const HeatKernelSpec& kernel, double out_t0,
                             double out_dt, std::size_t count, double tau_min) {
    require(!input.slices.empty(), "convolution input has no slices");
    require(tau_min > 0.0, "minimum lag must be positive");
    require(out_dt > 0.0, "output spacing must be positive");
    const Grid& g = input.grid;
    const double start = input.t0;
    SpaceTimeField result(g, out_t0, out_dt);
    auto smoothed = [&](const ScalarField& f, double tau) { return gaussian_smooth(f, kernel.variance_per_lag * tau); };

    if (input.is_static()) {
        // Cumulative integral in the lag; the lag mesh contains every output lag.
        const ScalarField& f = input.slices.front();
        std::vector<double> targets;
        for (std::size_t k = 0; k < count; ++k) targets.push_back(std::max(0.0, out_t0 + out_dt * k - start));
        const double span = targets.empty() ? 0.0 : *std::max_element(targets.begin(), targets.end());
        std::vector<double> mesh = lag_mesh(span, tau_min, std::numeric_limits<double>::infinity());
        for (double t : targets) mesh.push_back(t);
        std::sort(mesh.begin(), mesh.end());
        mesh.erase(std::unique(mesh.begin(), mesh.end(), [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, b); }),
                   mesh.end());
        std::vector<double> acc(g.size(), 0.0);
        std::vector<std::pair<double, std::vector<double>>> cumulative{{0.0, acc}};
        ScalarField left = f;
        for (std::size_t m = 1; m < mesh.size(); ++m) {
            const double a = mesh[m - 1], b = mesh[m];
            ScalarField mid = smoothed(f, 0.5 * (a + b));
            ScalarField right = smoothed(f, b);
            const double w = (b - a) / 6.0;
            axpy(acc, w, left.values);
            axpy(acc, 4.0 * w, mid.values);
            axpy(acc, w, right.values);
            const bool wanted = std::any_of(targets.begin(), targets.end(),
                                            [b](double t) { return std::abs(t - b) <= 1e-14 * std::max(1.0, b); });
            if (wanted) cumulative.emplace_back(b, acc);
            left = std::move(right);
        }
        for (double t : targets) {
            auto it = std::min_element(cumulative.begin(), cumulative.end(), [t](const auto& x, const auto& y) {
                return std::abs(x.first - t) < std::abs(y.first - t);
            });
            ScalarField slice(g, it->second);
            for (double& v : slice.values) v *= kernel.prefactor;
            result.push_back(std::move(slice));
        }
        return result;
    }

    for (std::size_t k = 0; k < count; ++k) {
        const double t = out_t0 + out_dt * static_cast<double>(k);
        const double span = std::max(0.0, t - start);
        std::vector<double> mesh = lag_mesh(span, tau_min, input.dt);
        std::vector<double> acc(g.size(), 0.0);
        auto integrand = [&](double tau) { return smoothed(input.interpolate(t - tau), tau); };
        if (mesh.size() > 1) {
            ScalarField left = integrand(0.0);
            for (std::size_t m = 1; m < mesh.size(); ++m) {
                const double a = mesh[m - 1], b = mesh[m];
                ScalarField mid = integrand(0.5 * (a + b));
                ScalarField right = integrand(b);
                const double w = (b - a) / 6.0;
                axpy(acc, w, left.values);
                axpy(acc, 4.0 * w, mid.values);
                axpy(acc, w, right.values);
                left = std::move(right);
            }
        }
        ScalarField slice(g, std::move(acc));
        for (double& v : slice.values) v *= kernel.prefactor;
        result.push_back(std::move(slice));
    }
    return result;
}

} // namespace shlab
