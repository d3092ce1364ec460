#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shlab/grid.hpp"

namespace shlab {

// Space-time cylinder |x| <= radius, t <= duration outside of which every
// realized potential vanishes.
struct Support {
    double radius = std::numeric_limits<double>::infinity();
    double duration = std::numeric_limits<double>::infinity();
};

// Closed-form scalar f(x, t); lets refinement studies resample the same f.
struct ScalarFunction {
    std::function<double(const Point&, double)> eval;
    bool time_dependent = false;
    std::string name;
};

// Smooth compactly supported bump: amplitude * phi(|x| / width) * (1 + 0.5 sin(omega t)),
// phi(r) = exp(1 - 1 / (1 - r^2)) for r < 1. Bounded, with sup = amplitude * (1.5 if omega != 0).
ScalarFunction bump_function(double amplitude, double width, double omega = 0.0);

namespace potential {
struct InverseSquare { double a = 0.0; };       // a / max(|x|^2, h^2)
struct LogDerived { double b = 0.0; };          // derivative combination of f = b ln r
struct Oscillating { std::optional<double> epsilon; };  // f = sin(1 / max(||x| - sqrt t|, eps)), eps defaults to 4h
struct FromF { SpaceTimeField f; double alpha = 1.0; };
struct FromFunction { ScalarFunction f; double alpha = 1.0; };
struct Explicit { SpaceTimeField V; };
struct Constant { double c = 0.0; };
} // namespace potential

using PotentialKind = std::variant<potential::InverseSquare, potential::LogDerived, potential::Oscillating,
                                   potential::FromF, potential::FromFunction, potential::Explicit,
                                   potential::Constant>;

struct PotentialSpec {
    PotentialKind kind = potential::Constant{0.0};
    Support support{};
    double coupling = 1.0;  // realized field is multiplied by this factor (used for pV, alpha V)

    PotentialSpec scaled(double factor) const;
    bool time_dependent() const;
    std::string describe() const;
};

struct TruncationLadder {
    std::vector<double> upper;
    std::vector<double> lower;

    static TruncationLadder make(std::vector<double> upper, std::vector<double> lower);
};

// Sample instants t = 0, dt, ..., horizon; a static spec yields a single slice.
SpaceTimeField realize(const PotentialSpec& spec, const Grid& grid, double dt, double horizon);

// V = Laplacian f - alpha |grad f|^2 - d_t f with central time differences
// (second-order one-sided at the ends). A single-slice f has d_t f = 0.
SpaceTimeField combine_derivatives(const SpaceTimeField& f, double alpha);

SpaceTimeField truncate_above(const SpaceTimeField& V, double level);
SpaceTimeField truncate_below(const SpaceTimeField& V, double level);
SpaceTimeField apply_support(const SpaceTimeField& V, const Support& support);

// Largest a for which a / |x|^2 admits a derivative-combination form: (n-2)^2 / 4.
double max_subcritical_coupling(int dim);

} // namespace shlab
