#include "shlab/kato.hpp"

#include <algorithm>
#include <cmath>

#include "shlab/parallel.hpp"

namespace shlab {

namespace {

void require_interior_support(const SpaceTimeField& input) {
    const Grid& g = input.grid;
    if (g.periodic()) return;
    for (const auto& slice : input.slices) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (slice.values[i] == 0.0) continue;
            const Index3 idx = g.unflatten(i);
            for (int d = 0; d < g.dim(); ++d) {
                const int k = idx[static_cast<std::size_t>(d)];
                if (k == 0 || k == g.points() - 1)
                    throw ValidationError("input support touches the box boundary");
            }
        }
    }
}

// Least-squares slope of ys against xs.
double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

// Space-time L^p norm over the output slices (trapezoid in time).
double space_time_norm(const SpaceTimeField& f, double p) {
    const Grid& g = f.grid;
    double total = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) {
        double w = (k == 0 || k + 1 == f.size()) ? 0.5 : 1.0;
        if (f.size() == 1) w = 1.0;
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += g.quadrature_weight(i) * std::pow(std::abs(f.slices[k].values[i]), p);
        total += w * f.dt * s;
    }
    return std::pow(total, 1.0 / p);
}

} // namespace

HeatConvolution heat_convolve(const SpaceTimeField& input, const ConvolutionOptions& options) {
    require(!input.slices.empty(), "convolution input has no slices");
    require(input.all_finite(), "convolution input must be finite");
    require_interior_support(input);
    const Grid& g = input.grid;
    HeatKernelSpec kernel = options.b ? g_b_kernel(g.dim(), *options.b) : probability_kernel();
    const double tau_min = 0.0625 * g.spacing() * g.spacing();
    SpaceTimeField result(g, input.t0, 1.0);
    if (input.is_static()) {
        require(options.horizon > 0.0, "convolution horizon must be positive");
        require(options.outputs >= 2, "need at least two output times");
        const double out_dt = options.horizon / static_cast<double>(options.outputs - 1);
        result = time_convolve(input, kernel, input.t0, out_dt, options.outputs, tau_min);
    } else {
        result = time_convolve(input, kernel, input.t0, input.dt, input.size(), tau_min);
    }
    HeatConvolution out{input, options.b, std::move(result), {}};
    out.refinement_trace.push_back(out.result.max_abs());
    return out;
}

FieldSource static_source(std::function<double(const Point&, double h)> fn, std::string name) {
    FieldSource src;
    src.name = std::move(name);
    src.sample = [fn = std::move(fn)](const Grid& g) {
        const double h = g.spacing();
        return SpaceTimeField::constant_in_time(ScalarField::sample(g, [&](const Point& x) { return fn(x, h); }));
    };
    return src;
}

Classification classify(const FieldSource& input, const RefinementPlan& plan, const ClassifyOptions& options) {
    require(plan.points.size() >= 3, "classification needs at least 3 refinement levels");
    for (std::size_t i = 1; i < plan.points.size(); ++i)
        require(plan.points[i] > plan.points[i - 1], "refinement levels must increase");
    require(options.slope_tolerance > 0.0, "slope tolerance must be positive");
    Classification c;
    c.exponents = options.exponents;
    c.levels.resize(plan.points.size());
    parallel_for(plan.points.size(), [&](std::size_t l) {
        const Grid g = Grid::make(plan.dim, plan.half_width, plan.points[l], plan.boundary);
        const SpaceTimeField field = input.sample(g);
        const HeatConvolution conv = heat_convolve(field, options.convolution);
        RefinementLevel& level = c.levels[l];
        level.points = plan.points[l];
        level.spacing = g.spacing();
        level.sup = conv.result.max_abs();
        // Scale of the result where the input lives (any slice with a nonzero input value).
        double sum = 0.0, weight = 0.0;
        for (std::size_t k = 0; k < conv.result.size(); ++k) {
            const ScalarField& in = field.at(conv.result.time(k));
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (in.values[i] == 0.0) continue;
                const double w = g.quadrature_weight(i);
                sum += w * conv.result.slices[k].values[i] * conv.result.slices[k].values[i];
                weight += w;
            }
        }
        level.scale = weight > 0.0 ? std::sqrt(sum / weight) : 0.0;
        for (double p : options.exponents) level.lp.push_back(space_time_norm(conv.result, p));
    });

    std::vector<double> xs, sups, logs;
    for (const auto& level : c.levels) {
        xs.push_back(std::log(1.0 / level.spacing));
        sups.push_back(level.sup);
        logs.push_back(std::log(std::max(level.sup, 1e-300)));
    }
    c.raw_slope = slope(xs, sups);
    c.log_slope = slope(xs, logs);
    const double scale = c.levels.back().scale;
    c.growth_exponent = scale > 0.0 ? c.raw_slope / scale : 0.0;

    const auto& fine = c.levels.back();
    const auto& prev = c.levels[c.levels.size() - 2];
    c.lp_stable = true;
    for (std::size_t e = 0; e < options.exponents.size(); ++e) {
        const double denom = std::max(std::abs(fine.lp[e]), 1e-300);
        const double change = fine.lp[e] == prev.lp[e] ? 0.0 : std::abs(fine.lp[e] - prev.lp[e]) / denom;
        c.lp_change.push_back(change);
        c.lp_stable = c.lp_stable && change < options.lp_tolerance;
    }
    if (c.growth_exponent <= options.slope_tolerance) c.verdict = Verdict::heat_bounded;
    else if (c.growth_exponent <= 2.0 * options.slope_tolerance) c.verdict = Verdict::inconclusive;
    else c.verdict = c.lp_stable ? Verdict::almost_heat_bounded : Verdict::neither;
    return c;
}

GradientSquareReport gradient_square_heat_test(const FieldSource& f, double b, const RefinementPlan& plan,
                                               const ClassifyOptions& options) {
    require(b > 0.0, "Gaussian parameter b must be positive");
    FieldSource grad2;
    grad2.name = "|grad " + f.name + "|^2";
    grad2.sample = [&f](const Grid& g) {
        const SpaceTimeField field = f.sample(g);
        SpaceTimeField out(g, field.t0, field.dt);
        for (const auto& slice : field.slices) out.push_back(gradient(slice).norm_squared());
        return out;
    };
    ClassifyOptions opts = options;
    opts.convolution.b = b;
    GradientSquareReport report;
    report.b = b;
    report.classification = classify(grad2, plan, opts);
    for (const auto& level : report.classification.levels) report.sup_trace.push_back(level.sup);
    const double last = report.sup_trace.back(), before = report.sup_trace[report.sup_trace.size() - 2];
    report.bounded = last == before || std::abs(last - before) <= 0.05 * std::max(std::abs(last), 1e-300);
    return report;
}

FieldSource potential_source(const PotentialSpec& spec, double dt, double horizon) {
    FieldSource src;
    src.name = spec.describe();
    src.sample = [spec, dt, horizon](const Grid& g) { return realize(spec, g, dt, horizon); };
    return src;
}

FormBoundedAhbReport form_bounded_implies_ahb_experiment(const PotentialSpec& spec, const SpectralOptions& spectral,
                                                         const RefinementPlan& plan, const ClassifyOptions& options) {
    const FieldSource source = potential_source(spec, spectral.dt, spectral.horizon);
    const SpaceTimeField coarse = source.sample(Grid::make(plan.dim, plan.half_width, plan.points.front(), plan.boundary));
    for (const auto& slice : coarse.slices)
        if (slice.min() < 0.0) throw ValidationError("form bounded => almost heat bounded needs V >= 0");
    FormBoundedAhbReport report;
    report.spectral = form_bounded_test(spec, spectral);
    report.form_bounded = report.spectral.form_bounded;
    report.classification = classify(source, plan, options);
    const Verdict v = report.classification.verdict;
    report.almost_heat_bounded = v == Verdict::heat_bounded || v == Verdict::almost_heat_bounded;
    return report;
}

std::string to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::heat_bounded: return "heat_bounded";
    case Verdict::almost_heat_bounded: return "almost_heat_bounded";
    case Verdict::neither: return "neither";
    default: return "inconclusive";
    }
}

} // namespace shlab
