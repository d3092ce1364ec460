#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "shlab/heat.hpp"
#include "shlab/positivity.hpp"
#include "shlab/potentials.hpp"

namespace shlab {

struct ConvolutionOptions {
    std::optional<double> b;   // g_b kernel; probability G0 when empty
    double horizon = 1.0;      // static inputs: outputs at horizon * k / (outputs - 1)
    std::size_t outputs = 5;   // time-dependent inputs use their own slice times instead
};

struct HeatConvolution {
    SpaceTimeField input;
    std::optional<double> b;
    SpaceTimeField result;
    std::vector<double> refinement_trace;  // sup |result| per refinement level (one entry here)
};

// int_0^t int K(x, t; y, s) input(y, s) dy ds by exact-kernel quadrature (no PDE solve).
HeatConvolution heat_convolve(const SpaceTimeField& input, const ConvolutionOptions& options = {});

// Resamples the same continuum field on any grid (used for refinement studies).
struct FieldSource {
    std::function<SpaceTimeField(const Grid&)> sample;
    std::string name;
};

FieldSource static_source(std::function<double(const Point&, double h)> fn, std::string name);

struct RefinementPlan {
    int dim = 3;
    double half_width = 1.5;
    std::vector<int> points{16, 32, 64};
    Boundary boundary = Boundary::dirichlet_zero;
};

enum class Verdict { heat_bounded, almost_heat_bounded, neither, inconclusive };

struct ClassifyOptions {
    ConvolutionOptions convolution;
    double slope_tolerance = 0.1;  // heat bounded when growth_exponent <= this
    double lp_tolerance = 0.05;    // L^p traces must change less than this between the last two levels
    std::vector<double> exponents{2.0, 4.0, 8.0};
};

struct RefinementLevel {
    int points = 0;
    double spacing = 0.0;
    double sup = 0.0;
    double scale = 0.0;       // RMS of |result| over the input's support at this level
    std::vector<double> lp;   // space-time L^p norms of the result, one per exponent
};

struct Classification {
    Verdict verdict = Verdict::inconclusive;
    double growth_exponent = 0.0;  // d sup / d ln(1/h) divided by the finest-level scale
    double raw_slope = 0.0;        // d sup / d ln(1/h)
    double log_slope = 0.0;        // d ln sup / d ln(1/h)
    std::vector<double> lp_change; // relative change between the last two levels, per exponent
    bool lp_stable = false;
    std::vector<double> exponents;
    std::vector<RefinementLevel> levels;
};

Classification classify(const FieldSource& input, const RefinementPlan& plan, const ClassifyOptions& options = {});

struct GradientSquareReport {
    double b = 0.25;
    std::vector<double> sup_trace;  // per refinement level
    bool bounded = false;           // sup stabilizes (relative change below 5%) between the last two levels
    Classification classification;
};

// g_b * |grad f|^2 over a refinement plan.
GradientSquareReport gradient_square_heat_test(const FieldSource& f, double b, const RefinementPlan& plan,
                                               const ClassifyOptions& options = {});

// Samples a potential spec on each refinement grid (static specs only need dt for slicing).
FieldSource potential_source(const PotentialSpec& spec, double dt = 0.01, double horizon = 0.0);

struct FormBoundedAhbReport {
    SpectralReport spectral;
    Classification classification;
    bool form_bounded = false;
    bool almost_heat_bounded = false;  // heat bounded counts as almost heat bounded
};

// Spectral test via the positivity module, then classify V itself. Requires V >= 0.
FormBoundedAhbReport form_bounded_implies_ahb_experiment(const PotentialSpec& spec, const SpectralOptions& spectral,
                                                         const RefinementPlan& plan,
                                                         const ClassifyOptions& options = {});

std::string to_string(Verdict verdict);

} // namespace shlab
