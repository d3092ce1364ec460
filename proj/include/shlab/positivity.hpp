#pragma once

#include <functional>
#include <vector>

#include "shlab/kernels.hpp"
#include "shlab/linalg.hpp"
#include "shlab/potentials.hpp"
#include "shlab/solver.hpp"

namespace shlab {

struct ForwardReport {
    SpaceTimeField u;
    SpaceTimeField V;
    double residual = 0.0;      // max over slices of ||Lap u + V u - d_t u||_2 / ||u||_2, off the dirichlet faces
    double residual_max = 0.0;  // same with sup norms
};

// u = e^{-f}, V = Laplacian f - |grad f|^2 - d_t f; residual of the heat equation with potential V.
ForwardReport forward_positive_solution(const SpaceTimeField& f);

// Radial shell r_in <= |x| <= r_out and t - t0 >= t_from where the log transform is compared.
struct ShellWindow {
    double r_in = 0.0;
    double r_out = 0.0;
    double t_from = 0.0;
};

struct LogTransform {
    SpaceTimeField w;
    SpaceTimeField f;
    SpaceTimeField residual_V;
    double max_abs_error = 0.0;    // sup over window of |residual_V - V_used|
    double relative_error = 0.0;   // max_abs_error / sup over window of |V_used|
    double pointwise_error = 0.0;  // sup over window of |residual_V - V_used| / max(|V_used|, 1e-12 sup|V_used|)
    double rms_relative_error = 0.0;
    std::size_t window_nodes = 0;
};

// f = -ln w and residual_V = Laplacian f - |grad f|^2 - d_t f, compared against the potential
// the solution was computed with. Interior slices only (the time difference is central).
LogTransform recover_f(const CauchySolution& w, const ShellWindow& window);

struct EigenState {
    double lambda = 0.0;
    double lower_bound = 0.0;
    ScalarField u;  // principal eigenfunction on the full grid, max = 1
    int iterations = 0;
    int linear_iterations = 0;
    bool reduced = false;  // computed on one reflection cell of a mirror-symmetric potential
};

// Smallest eigenpair of -Lap_h - V with the grid's boundary convention.
EigenState principal_eigenstate(const ScalarField& V, const EigenOptions& options = {}, bool use_symmetry = true,
                                const ScalarField* guess = nullptr);

struct SpectralOptions {
    std::vector<int> points{32, 64, 128};
    double half_width = 1.0;
    double b = 0.0;            // form bound constant tested: lambda_min >= -b
    double dt = 0.01;          // slice spacing for time-dependent potentials
    double horizon = 0.0;      // slices up to this time for time-dependent potentials
    bool use_symmetry = true;
    EigenOptions eigen{};
};

struct SpectralLevel {
    int points = 0;
    double spacing = 0.0;
    double lambda_min = 0.0;
    double lower_bound = 0.0;
    int iterations = 0;
    int linear_iterations = 0;
    bool reduced = false;
    double worst_slice_time = 0.0;
    double time_average = 0.0;  // trapezoid mean of lambda_min over the slices (the space-time form)
};

struct SpectralReport {
    double lambda_min = 0.0;  // finest level
    int iterations = 0;
    std::vector<SpectralLevel> refinement_trace;
    bool diverging = false;   // lambda_min decreased at the finest refinement step
    bool form_bounded = false;
    double b = 0.0;
};

SpectralReport form_bounded_test(const PotentialSpec& spec, const SpectralOptions& options = {});

struct GroundStateLog {
    SpectralReport spectral;
    EigenState state;
    ScalarField f;
    double shift = 0.0;           // -mu with mu = lambda_min + b; reported, never absorbed silently
    double identity_residual = 0.0;  // max over |x| <= L/2 of |V - (Lap f - |grad f|^2 + b - mu)| / sup|V - b|
    double identity_rms = 0.0;
};

// Requires form_bounded_test to pass (else HypothesisError).
GroundStateLog ground_state_log(const PotentialSpec& spec, const SpectralOptions& options);

struct CorollaryLevel {
    double level = 0.0;
    double energy_ratio = 0.0;  // max_t ||u(t)||_2 / (||u0||_2 e^{b t})
    double probe_value = 0.0;   // u at the probe point, final time
};

struct CorollaryReport {
    SpectralReport spectral;
    double b = 0.0;
    std::vector<CorollaryLevel> levels;
    double saturation_growth = 0.0;  // per-octave growth of the probe value at the top two levels
    bool saturated = false;
    LogTransform roundtrip;
    double slack = 0.01;
};

struct CorollaryOptions {
    SpectralOptions spectral;
    int points = 32;           // grid used for the ladder solves
    SolverConfig solver;
    double horizon = 0.1;
    double lower_floor = 1e3;
    double slack = 0.01;
    Point probe{0.25, 0.0, 0.0};
    ShellWindow window;        // r_out = 0 means [4h, R0/2] of the potential's support
};

// Requires form_bounded_test to pass (else HypothesisError). Solves along the upper
// ladder from u0, checks the L^2 energy bound with b = max(options.spectral.b, -lambda_min),
// the saturation of the ladder limit, and round-trips the top level through recover_f.
CorollaryReport corollary1_experiment(const PotentialSpec& spec, const std::function<double(const Point&)>& u0,
                                      const TruncationLadder& ladder, const CorollaryOptions& options);

} // namespace shlab
