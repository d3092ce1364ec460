#pragma once

#include <string>
#include <vector>

#include "shlab/grid.hpp"

namespace shlab {

enum class Scheme { crank_nicolson_strang, backward_euler };

struct SolverConfig {
    Scheme scheme = Scheme::crank_nicolson_strang;
    double dt = 1e-3;
    double linear_tol = 1e-10;
    int max_linear_iters = 10000;
    int record_every = 1;     // keep every k-th step in the stored field
    double start_time = 0.0;  // initial data sits at this time; V is indexed in absolute time
};

struct StepDiagnostics {
    double time = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct CauchySolution {
    SpaceTimeField field;
    SpaceTimeField potential;
    ScalarField initial;
    SolverConfig config;
    std::vector<StepDiagnostics> diagnostics;  // one entry per step, plus the initial state
    int fallback_steps = 0;                    // diffusion steps redone with backward Euler
    int linear_iterations = 0;
};

/**
 * Time-steps du/dt = Laplacian u + V u from u0 over [start, start + horizon].
 *
 * Each step is exp(V dt/2) . D(dt) . exp(V dt/2), V taken at the step's start
 * and end time. D is Crank-Nicolson (or backward Euler) diffusion, subcycled
 * so that every substep has dt_sub <= h^2 / n: then both the explicit and the
 * implicit halves are entrywise nonnegative operators and the step preserves
 * positivity and the pointwise order of potentials. The implicit systems are
 * strictly diagonally dominant and solved by Jacobi sweeps, whose iterates
 * stay nonnegative, with an a priori sweep count from the contraction factor.
 */
CauchySolution solve_cauchy(const ScalarField& u0, const SpaceTimeField& V, const SolverConfig& config,
                            double horizon);

// Max over probe slices of sup|u - free(u0) - Duhamel(V u)| / sup|u| on |x| <= L/2.
double duhamel_residual(const CauchySolution& sol);

enum class Ordering { a_geq_b, b_geq_a, equal, incomparable };

struct OrderingReport {
    std::vector<double> min_a_minus_b;  // per recorded slice
    std::vector<double> min_b_minus_a;
    double tolerance = 0.0;
    Ordering verdict = Ordering::incomparable;
};

OrderingReport compare_solutions(const CauchySolution& a, const CauchySolution& b);

std::string to_string(Ordering ordering);
std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

} // namespace shlab
