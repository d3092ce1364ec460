#include "shlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shlab/error.hpp"

namespace shlab {

double weighted_dot(std::span<const double> a, std::span<const double> b, std::span<const double> weights) {
    double s = 0.0;
    if (weights.empty()) {
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    } else {
        for (std::size_t i = 0; i < a.size(); ++i) s += weights[i] * a[i] * b[i];
    }
    return s;
}

CgResult conjugate_gradient(const LinearOperator& op, std::span<const double> rhs, std::span<double> x,
                            double tol, int max_iters, std::span<const double> weights) {
    const std::size_t n = rhs.size();
    CgResult result;
    const double bnorm = std::sqrt(weighted_dot(rhs, rhs, weights));
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        result.converged = true;
        return result;
    }
    std::vector<double> r(n), p(n), ap(n);
    op(x, ap);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - ap[i];
    double rr = weighted_dot(r, r, weights);
    result.relative_residual = std::sqrt(rr) / bnorm;
    if (result.relative_residual <= tol) {
        result.converged = true;
        return result;
    }
    p = r;
    for (int it = 1; it <= max_iters; ++it) {
        op(p, ap);
        const double curvature = weighted_dot(p, ap, weights);
        if (!(curvature > 0.0)) {
            result.indefinite = true;
            result.iterations = it;
            return result;
        }
        const double alpha = rr / curvature;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        const double rr_new = weighted_dot(r, r, weights);
        result.iterations = it;
        result.relative_residual = std::sqrt(rr_new) / bnorm;
        if (result.relative_residual <= tol) {
            result.converged = true;
            return result;
        }
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    return result;
}

namespace {

struct Bounds {
    double rayleigh = 0.0;
    double collatz = -std::numeric_limits<double>::infinity();
    bool positive = false;
};

Bounds eigen_bounds(const LinearOperator& op, std::span<const double> x, std::span<const double> weights,
                    std::vector<double>& ax) {
    op(x, ax);
    Bounds b;
    b.rayleigh = weighted_dot(x, ax, weights) / weighted_dot(x, x, weights);
    b.positive = std::all_of(x.begin(), x.end(), [](double v) { return v > 0.0; });
    if (b.positive) {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i) m = std::min(m, ax[i] / x[i]);
        b.collatz = m;
    }
    return b;
}

void normalize(std::vector<double>& x, std::span<const double> weights) {
    const double norm = std::sqrt(weighted_dot(x, x, weights));
    for (double& v : x) v /= norm;
}

} // namespace

EigenResult smallest_eigenpair(const LinearOperator& op, std::vector<double> start,
                               std::span<const double> weights, const EigenOptions& options) {
    require(!start.empty(), "eigen solver needs a start vector");
    require(std::all_of(start.begin(), start.end(), [](double v) { return v > 0.0; }),
            "eigen solver start vector must be strictly positive");
    const std::size_t n = start.size();
    EigenResult result;
    std::vector<double> x = std::move(start);
    std::vector<double> ax(n), y(n);
    normalize(x, weights);
    Bounds b = eigen_bounds(op, x, weights, ax);
    double shift = b.collatz;

    for (int it = 1; it <= options.max_iters; ++it) {
        const double scale = std::max(1.0, std::abs(b.rayleigh));
        if (b.positive) {
            const double gap = std::max(b.rayleigh - b.collatz, 0.0);
            shift = std::max(shift, b.collatz - 0.1 * gap - 1e-12 * scale);
        }
        LinearOperator shifted = [&](std::span<const double> in, std::span<double> out) {
            op(in, out);
            for (std::size_t i = 0; i < n; ++i) out[i] -= shift * in[i];
        };
        const double denom = std::max(b.rayleigh - shift, 1e-12 * scale);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] / denom;
        CgResult cg = conjugate_gradient(shifted, x, y, options.linear_tol, options.max_linear_iters, weights);
        result.linear_iterations += cg.iterations;
        if (cg.indefinite) {
            // The shift passed the bottom of the spectrum; retreat and retry.
            shift -= 2.0 * std::max(b.rayleigh - shift, 1e-3 * scale);
            continue;
        }
        if (!cg.converged)
            throw NumericalError("inner CG solve of the inverse iteration did not converge");
        x = y;
        normalize(x, weights);
        b = eigen_bounds(op, x, weights, ax);
        result.iterations = it;
        if (b.positive && b.rayleigh - b.collatz <= options.tol * std::max(1.0, std::abs(b.rayleigh))) {
            result.converged = true;
            break;
        }
    }
    result.eigenvalue = b.rayleigh;
    result.lower_bound = b.collatz;
    result.positive = b.positive;
    result.vector = std::move(x);
    return result;
}

} // namespace shlab
