#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <variant>
#include <vector>

#include "shlab/grid.hpp"
#include "shlab/kato.hpp"

namespace shlab {

namespace flow {
struct TaylorGreen {};
struct Abc { double a = 1.0, b = 1.0, c = 1.0; };
// Curl of a random trigonometric vector potential with wavenumbers |k| <= max_wavenumber.
struct RandomSolenoidal {
    std::uint64_t seed = 0;
    int max_wavenumber = 2;
};
} // namespace flow

using FlowFamily = std::variant<flow::TaylorGreen, flow::Abc, flow::RandomSolenoidal>;

struct FlowField {
    VectorField u;
    VectorField w;              // discrete curl of u
    double div_residual = 0.0;  // max |div u|
};

// Periodic 3-D grids only. Coordinates are scaled by pi / L so every family fits one period.
FlowField synthetic_flow(const FlowFamily& family, const Grid& grid);
// w = curl u and the divergence residual for an arbitrary sampled velocity.
FlowField make_flow(VectorField u);

struct StretchingField {
    ScalarField alpha;
    std::vector<std::uint8_t> evaluated;  // 0 where |w| vanishes and alpha is set to 0
};

// alpha = w_i (d_j u_i) w_j / |w|^2.
StretchingField stretching_alpha(const FlowField& flow);

struct QField {
    ScalarField q_form_A;
    ScalarField q_form_B;
    std::vector<std::uint8_t> mask;  // |w| >= 1
    double identity_gap = 0.0;       // max |A - B| / (1 + |A|)
    // Form A = stretch - advect + grad_f - grad_w, assembled in that order.
    ScalarField stretch;  // alpha |w|^2 / (|w|^2 + 1)
    ScalarField advect;   // u . grad f
    ScalarField grad_f;   // 2 |grad f|^2
    ScalarField grad_w;   // |grad w|^2 / (|w|^2 + 1)
    double cross_term_max = 0.0;  // max |curl(u x w) . w| of form B (zero for Beltrami flows)
};

QField compute_Q(const FlowField& flow);

struct QSeries {
    double t0 = 0.0;
    double dt = 1.0;
    std::vector<QField> fields;
};

// Produces the same series on any grid (for refinement studies).
using QSeriesSource = std::function<QSeries(const Grid&)>;

// slices flows at t = horizon k / (slices - 1) with amplitude e^{-decay t}; decay 0 freezes the flow.
QSeriesSource flow_series(FlowFamily family, double horizon, int slices, double decay);
// Q = (T - t)^{-1} on the ball |x - center| <= radius, sampled at N / 2 slices over [0, T),
// so the time step shrinks with the spacing.
QSeriesSource manufactured_spike(double blow_up_time, Point center, double radius);

struct QHeatReport {
    Classification classification;
    double mask_fraction = 0.0;  // finest level, all slices
    bool vacuous = false;        // empty mask: nothing to classify
};

// Restricts Q (form A) to the mask, zero elsewhere, and classifies it over the plan.
QHeatReport q_heat_bounded_check(const QSeriesSource& series, const RefinementPlan& plan,
                                 const ClassifyOptions& options = {});

// CSV with a '# grid dim=3 half_width=.. points=.. boundary=periodic' header line, then
// x,y,z,u1,u2,u3 rows in flat node order.
void write_flow_csv(std::ostream& out, const FlowField& flow);
FlowField read_flow_csv(std::istream& in);
// x,y,z,q_form_A,q_form_B,mask rows.
void write_q_csv(std::ostream& out, const QField& q);

} // namespace shlab
