#pragma once

#include <vector>

#include "shlab/grid.hpp"

namespace shlab {

enum class KernelNormalization {
    probability,  // (4 pi (t-s))^{-n/2} exp(-|x-y|^2 / (4 (t-s)))
    paper_g_b     // (t-s)^{-n/2} exp(-b |x-y|^2 / (t-s)), no normalization
};

double free_kernel_eval(const Point& x, double t, const Point& y, double s, int dim,
                        KernelNormalization normalization = KernelNormalization::probability, double b = 0.25);

// Convolution with a normalized Gaussian of the given per-axis variance. Each
// axis weight is the Gaussian mass of the node's cell, so variance 0 is the
// identity and constants are preserved away from the box. Dirichlet grids
// treat the outside as zero (whole-space kernel on compactly supported
// data); periodic grids sum all images.
ScalarField gaussian_smooth(const ScalarField& field, double variance);

// e^{tau Laplacian} with the exact whole-space (or periodic) kernel.
ScalarField apply_free_heat(const ScalarField& field, double tau);

// Space-time kernel K(x, t; y, s) = prefactor * normal(x - y; variance_per_lag * (t - s)).
struct HeatKernelSpec {
    double prefactor = 1.0;
    double variance_per_lag = 2.0;
};

HeatKernelSpec probability_kernel();
// g_b = (pi / b)^{n/2} * normal(variance (t - s) / (2 b)).
HeatKernelSpec g_b_kernel(int dim, double b);

/**
 * result(x, t) = int_{t0}^{t} int K(x, t; y, s) input(y, s) dy ds at the
 * output instants out_t0 + k * out_dt, where t0 is the input's start time.
 *
 * The lag tau = t - s is integrated with Simpson panels on a mesh that is
 * geometric (ratio 2) from tau_min upward; time-dependent inputs cap the panel
 * width at their slice spacing and are linearly interpolated between slices.
 */
SpaceTimeField time_convolve(const SpaceTimeField& input, const HeatKernelSpec& kernel, double out_t0,
                             double out_dt, std::size_t count, double tau_min);

} // namespace shlab
