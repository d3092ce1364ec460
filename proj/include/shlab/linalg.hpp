#pragma once

#include <functional>
#include <span>
#include <vector>

namespace shlab {

// y = A x for a self-adjoint operator (with respect to the weighted inner
// product used by the caller).
using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

double weighted_dot(std::span<const double> a, std::span<const double> b, std::span<const double> weights);

struct CgResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool indefinite = false;  // non-positive curvature met: operator is not positive definite
};

// Conjugate gradients for A x = b; x holds the initial guess. An empty
// weights span means the Euclidean inner product.
CgResult conjugate_gradient(const LinearOperator& op, std::span<const double> rhs, std::span<double> x,
                            double tol, int max_iters, std::span<const double> weights = {});

struct EigenResult {
    double eigenvalue = 0.0;
    double lower_bound = 0.0;  // Collatz-Wielandt bound from the final positive iterate
    std::vector<double> vector;
    int iterations = 0;
    int linear_iterations = 0;
    bool converged = false;
    bool positive = false;  // eigenvector strictly positive
};

struct EigenOptions {
    double tol = 1e-7;
    int max_iters = 200;
    double linear_tol = 1e-10;
    int max_linear_iters = 20000;
};

/**
 * Smallest eigenpair of a self-adjoint Z-matrix operator (non-positive
 * off-diagonal entries) by shifted inverse iteration.
 *
 * The shift is kept at the Collatz-Wielandt lower bound min_i (A x)_i / x_i
 * of the current positive iterate, so A - shift stays positive
 * semi-definite and the inner CG solves are well posed. Iteration stops when
 * the Rayleigh quotient and the lower bound agree to tol.
 */
EigenResult smallest_eigenpair(const LinearOperator& op, std::vector<double> start,
                               std::span<const double> weights, const EigenOptions& options = {});

} // namespace shlab
