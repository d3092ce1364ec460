#pragma once

#include <string>
#include <vector>

#include "shlab/heat.hpp"
#include "shlab/potentials.hpp"
#include "shlab/solver.hpp"

namespace shlab {

struct KernelConfig {
    SolverConfig solver;
    double horizon = 0.1;          // columns are computed for t - s in (0, horizon]
    double lower_floor = 1e3;      // every level is also truncated below at -lower_floor
    double gap_tolerance = 0.02;   // converged when the relative Cauchy gap is below this
    double divergence_growth = 0.10;  // per-octave on-diagonal growth that flags divergence
};

/**
 * Columns x -> G_{V_j}(x, t; y, s) of the truncated potentials
 * V_j = max(min(V, j), -floor) along the upper ladder.
 */
struct KernelEstimate {
    Point source{0.0, 0.0, 0.0};
    double source_time = 0.0;
    TruncationLadder ladder;
    std::vector<SpaceTimeField> columns;   // one per upper level
    std::vector<double> gaps;              // relative sup gap between consecutive levels
    std::vector<double> on_diagonal;       // G_j(y, s + horizon; y, s) per level
    std::vector<double> octave_growth;     // per-octave growth of on_diagonal between consecutive levels
    std::vector<bool> saturated;           // level at or above sup V: identical to the untruncated field
    double cauchy_gap = 0.0;
    double t_min = 0.0;
    double worst_monotonicity = 0.0;       // min over probes of (G_{j+1} - G_j) / scale
    bool converged = false;
    bool divergent = false;

    const SpaceTimeField& top() const { return columns.back(); }
};

KernelEstimate estimate_kernel(const PotentialSpec& spec, const Point& y, double s, const TruncationLadder& ladder,
                               const Grid& grid, const KernelConfig& config);

// x -> int G_V(x, t; y, s) dy: the solution at t from initial data 1 at s,
// using the top upper level of the ladder.
ScalarField mass_from_ones(const PotentialSpec& spec, double s, double t, const Grid& grid,
                           const TruncationLadder& ladder, const KernelConfig& config);

struct FeynmanKacReport {
    double p = 0.0;
    double slack = 0.05;
    std::size_t probes = 0;
    std::size_t violations = 0;
    double violation_fraction = 0.0;
    double worst_ratio = 0.0;  // max of G_V / (G_{pV}^{1/p} G_0^{(p-1)/p})
};

// Checks G_V <= G_{pV}^{1/p} G_0^{(p-1)/p} at probes |x - y| <= L/2, t - s >= t_min,
// where all three kernels are estimated by the same discretization.
FeynmanKacReport feynman_kac_check(const PotentialSpec& spec, double p, const std::vector<Point>& sources,
                                   const Grid& grid, const TruncationLadder& ladder, const KernelConfig& config,
                                   double slack = 0.05);

// Rows x, t, one value per ladder level, along the axis-0 line through the source.
void write_kernel_csv(const KernelEstimate& est, const std::string& path);

// Spatial probe filter shared by the kernel consumers: |x - y| <= L/2. Callers apply t - s >= t_min.
bool in_probe_region(const Grid& grid, std::size_t node, const Point& y);

} // namespace shlab
