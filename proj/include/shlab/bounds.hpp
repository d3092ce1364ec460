#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shlab/kernels.hpp"

namespace shlab {

enum class BoundSide { upper, lower };

// One sample G(x, t; y, s) of a kernel column used by the fits.
struct Probe {
    std::size_t node = 0;
    double t = 0.0;
    double tau = 0.0;  // t - s
    double r2 = 0.0;   // |x - y|^2
    double value = 0.0;
};

struct BoundFit {
    BoundSide side = BoundSide::upper;
    double c = 0.0;
    double b = 0.0;
    double residual = 0.0;  // worst log(G / (c g_b)) (upper) or log(c g_b / G) (lower); <= 0 when admissible
    double mean_log_gap = 0.0;  // mean |log(G / (c g_b))| over the fitted probes
    bool admissible = false;
    double window = 0.0;   // kappa of |x - y|^2 <= kappa (t - s) for lower fits, 0 for upper
    std::size_t probe_count = 0;
    double t_min = 0.0;
    double probe_radius = 0.0;
};

// Unnormalized Gaussian g_b = tau^{-n/2} exp(-b r2 / tau).
double gaussian_g_b(double r2, double tau, int dim, double b);

// b grid 2^{k/4}, 1/16 <= b <= 4.
std::vector<double> default_b_grid();

// Probes of the top column: |x - y| <= L/2, t - s >= t_min, and values at
// least 1e-6 of the slice maximum (the iterative solves leave noise below).
std::vector<Probe> collect_probes(const KernelEstimate& est);

BoundFit fit_gaussian_upper(const KernelEstimate& est, const std::vector<double>& b_grid = default_b_grid());
BoundFit fit_gaussian_lower(const KernelEstimate& est, double kappa = 4.0,
                            const std::vector<double>& b_grid = default_b_grid());

// Worst log-ratio of an existing fit against another estimate's probes.
double fit_residual(const BoundFit& fit, const KernelEstimate& est);

// (t - s, (t - s)^{n/2} G(y, t; y, s)) for t - s >= t_min.
std::vector<std::pair<double, double>> on_diagonal_profile(const KernelEstimate& est);

struct SourceLattice {
    std::vector<Point> points;
    double spacing = 0.0;
};

// Grid nodes with the given index stride inside the cube |y_i| <= radius.
SourceLattice make_source_lattice(const Grid& grid, int stride, double radius);

struct OperatorNormReport {
    double alpha = 2.0;
    double constant = 0.0;  // max over probes of ratio * (t - s)^{(alpha-1) n / (2 alpha)}
    std::vector<std::pair<double, double>> per_lag;  // (t - s, max ratio)
    std::size_t dictionary_size = 0;
};

// |sum_m G(x, t; y_m, s) phi(y_m) w| / ||phi||_{alpha/(alpha-1)} for one test function on the lattice.
double operator_ratio(const std::vector<KernelEstimate>& ensemble, const SourceLattice& lattice, std::size_t node,
                      std::size_t slice, const std::vector<double>& phi, double alpha);

// Dictionary: indicator cubes centred at each probe node (|x_i| <= radius / 2).
OperatorNormReport operator_norm_diag(const std::vector<KernelEstimate>& ensemble, const SourceLattice& lattice,
                                      double alpha);

// Reference constant s0^{1/alpha} (4 pi)^{-n (alpha-1) / (2 alpha)}.
double operator_norm_reference(int dim, double alpha, double s0);

struct EntropyTrace {
    std::vector<double> s;
    std::vector<double> H;  // NaN where the column is not positive under the weight
    std::vector<double> M;
    std::vector<std::size_t> nonpositive;  // nodes with u <= 0 under the weight, per slice
    SpaceTimeField m_field;

    explicit EntropyTrace(const Grid& g) : m_field(g, 0.0, 1.0) {}
};

// H(s) = int e^{-pi |y|^2} ln u(y, s) dy on |y| <= 4 for the top column, and
// M(s) = int e^{-pi |y|^2} m(y, s) dy with m = -(G0 * V).
EntropyTrace nash_entropy_trace(const KernelEstimate& est, const SpaceTimeField& V);

std::string to_string(BoundSide side);

} // namespace shlab
