#include "shlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "shlab/bounds.hpp"
#include "shlab/kato.hpp"
#include "shlab/kernels.hpp"
#include "shlab/nse.hpp"
#include "shlab/parallel.hpp"
#include "shlab/positivity.hpp"

namespace shlab {

namespace {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config reading. Every value read is copied into the resolved config, and any
// key left unread is reported as unknown.

class Section {
public:
    // Writes go through a pointer path from the root, since adding keys to an
    // ordered_json object invalidates references into it.
    Section(const json* in, json* root, json::json_pointer at, std::string path)
        : in_(in), root_(root), at_(std::move(at)), path_(std::move(path)) {}

    bool present() const { return in_ != nullptr; }
    bool has(const std::string& key) const { return in_ && in_->contains(key) && !(*in_)[key].is_null(); }

    double real(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const json* v = fetch(key);
        double value;
        if (v) {
            if (!v->is_number()) fail(key, "must be a number");
            value = v->get<double>();
            if (!std::isfinite(value)) fail(key, "must be finite");
        } else if (fallback) {
            value = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = value;
        return value;
    }

    double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
        const double v = real(key, fallback);
        if (!(v > 0.0)) fail(key, "must be positive");
        return v;
    }

    // Absent or null means "unbounded" (recorded as null).
    double extent(const std::string& key) {
        if (!has(key)) {
            out()[key] = nullptr;
            seen_.insert(key);
            return std::numeric_limits<double>::infinity();
        }
        return positive(key);
    }

    std::optional<double> maybe_real(const std::string& key) {
        if (!has(key)) {
            out()[key] = nullptr;
            seen_.insert(key);
            return std::nullopt;
        }
        return real(key);
    }

    int integer(const std::string& key, std::optional<int> fallback = std::nullopt) {
        const json* v = fetch(key);
        int value;
        if (v) {
            if (!v->is_number_integer()) fail(key, "must be an integer");
            value = v->get<int>();
        } else if (fallback) {
            value = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = value;
        return value;
    }

    std::uint64_t seed(const std::string& key) {
        const json* v = fetch(key);
        if (!v) fail(key, "is required (random inputs need an explicit seed)");
        if (!v->is_number_unsigned()) fail(key, "must be a non-negative integer");
        const auto value = v->get<std::uint64_t>();
        out()[key] = value;
        return value;
    }

    bool flag(const std::string& key, bool fallback) {
        const json* v = fetch(key);
        bool value = fallback;
        if (v) {
            if (!v->is_boolean()) fail(key, "must be true or false");
            value = v->get<bool>();
        }
        out()[key] = value;
        return value;
    }

    std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const json* v = fetch(key);
        std::string value;
        if (v) {
            if (!v->is_string()) fail(key, "must be a string");
            value = v->get<std::string>();
        } else if (fallback) {
            value = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = value;
        return value;
    }

    std::string choice(const std::string& key, const std::vector<std::string>& options,
                       std::optional<std::string> fallback = std::nullopt) {
        const std::string value = text(key, fallback);
        if (std::find(options.begin(), options.end(), value) == options.end()) {
            std::string list;
            for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
            fail(key, "must be one of: " + list);
        }
        return value;
    }

    std::vector<double> reals(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt) {
        const json* v = fetch(key);
        std::vector<double> value;
        if (v) {
            if (!v->is_array()) fail(key, "must be an array of numbers");
            for (const auto& e : *v) {
                if (!e.is_number()) fail(key, "must be an array of numbers");
                value.push_back(e.get<double>());
            }
        } else if (fallback) {
            value = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = value;
        return value;
    }

    std::vector<std::string> texts(const std::string& key, std::vector<std::string> fallback) {
        const json* v = fetch(key);
        std::vector<std::string> value;
        if (v) {
            if (!v->is_array()) fail(key, "must be an array of strings");
            for (const auto& e : *v) {
                if (!e.is_string()) fail(key, "must be an array of strings");
                value.push_back(e.get<std::string>());
            }
        } else {
            value = std::move(fallback);
        }
        out()[key] = value;
        return value;
    }

    std::vector<int> integers(const std::string& key, std::optional<std::vector<int>> fallback = std::nullopt) {
        const json* v = fetch(key);
        std::vector<int> value;
        if (v) {
            if (!v->is_array()) fail(key, "must be an array of integers");
            for (const auto& e : *v) {
                if (!e.is_number_integer()) fail(key, "must be an array of integers");
                value.push_back(e.get<int>());
            }
        } else if (fallback) {
            value = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = value;
        return value;
    }

    Point point(const std::string& key, std::optional<Point> fallback = std::nullopt) {
        const json* v = fetch(key);
        Point p{0.0, 0.0, 0.0};
        if (v) {
            if (!v->is_array() || v->empty() || v->size() > 3) fail(key, "must be an array of 1 to 3 numbers");
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) fail(key, "must be an array of 1 to 3 numbers");
                p[i] = (*v)[i].get<double>();
            }
        } else if (fallback) {
            p = *fallback;
        } else {
            fail(key, "is required");
        }
        out()[key] = p;
        return p;
    }

    std::vector<Point> points(const std::string& key, std::vector<Point> fallback) {
        const json* v = fetch(key);
        std::vector<Point> value;
        if (v) {
            if (!v->is_array() || v->empty()) fail(key, "must be a non-empty array of points");
            for (const auto& e : *v) {
                Point p{0.0, 0.0, 0.0};
                if (!e.is_array() || e.empty() || e.size() > 3) fail(key, "must contain arrays of 1 to 3 numbers");
                for (std::size_t i = 0; i < e.size(); ++i) {
                    if (!e[i].is_number()) fail(key, "must contain arrays of 1 to 3 numbers");
                    p[i] = e[i].get<double>();
                }
                value.push_back(p);
            }
        } else {
            value = std::move(fallback);
        }
        out()[key] = value;
        return value;
    }

    Section sub(const std::string& key, bool required) {
        const json* v = fetch(key);
        if (!v) {
            if (required) fail(key, "block is required");
            out()[key] = nullptr;
            return Section(nullptr, root_, at_ / key, path_ + "." + key);
        }
        if (!v->is_object()) fail(key, "must be an object");
        out()[key] = json::object();
        return Section(v, root_, at_ / key, path_ + "." + key);
    }

    // Moves the key to the end of the resolved block, so the order does not
    // depend on which alternative keys were given.
    void record_last(const std::string& key, double value) {
        out().erase(key);
        out()[key] = value;
    }

    void done() const {
        if (!in_) return;
        for (const auto& [key, value] : in_->items())
            if (!seen_.count(key)) throw ValidationError("unknown key '" + path_ + "." + key + "'");
    }

    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ValidationError("'" + path_ + "." + key + "' " + why);
    }

private:
    json& out() { return (*root_)[at_]; }

    const json* fetch(const std::string& key) {
        seen_.insert(key);
        if (!in_ || !in_->contains(key) || (*in_)[key].is_null()) return nullptr;
        return &(*in_)[key];
    }

    const json* in_;
    json* root_;
    json::json_pointer at_;
    std::string path_;
    std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Blocks.

Grid read_grid(Section s) {
    const int dim = s.integer("dim", 3);
    if (dim < 1 || dim > 3) s.fail("dim", "must be 1, 2 or 3");
    const double L = s.positive("half_width", 1.0);
    const int points = s.integer("points");
    if (points < 8) s.fail("points", "must be at least 8");
    const std::string boundary = s.choice("boundary", {"dirichlet_zero", "periodic"}, "dirichlet_zero");
    s.done();
    return Grid::make(dim, L, points, boundary == "periodic" ? Boundary::periodic : Boundary::dirichlet_zero);
}

struct TimeBlock {
    double dt = 0.0;
    double horizon = 0.0;
};

// dt is given directly or as a multiple of h^2, then shrunk so the horizon is a
// whole number of recorded steps.
TimeBlock read_time(Section s, const Grid& grid, int record_every) {
    TimeBlock t;
    t.horizon = s.positive("horizon");
    const double h2 = grid.spacing() * grid.spacing();
    double ratio, dt;
    if (s.has("dt_per_h2")) {
        ratio = s.positive("dt_per_h2");
        dt = ratio * h2;
        if (s.has("dt")) dt = std::min(dt, s.positive("dt"));
    } else {
        dt = s.positive("dt", h2);
        ratio = dt / h2;
    }
    auto chunks = static_cast<long>(std::ceil(t.horizon / (dt * record_every) - 1e-9));
    chunks = std::max(chunks, 1L);
    t.dt = t.horizon / static_cast<double>(chunks * record_every);
    s.record_last("dt_per_h2", ratio);
    s.record_last("dt", t.dt);
    s.done();
    return t;
}

SolverConfig read_solver(Section s) {
    SolverConfig c;
    c.scheme = parse_scheme(s.choice("scheme", {"crank_nicolson_strang", "backward_euler"}, "crank_nicolson_strang"));
    c.linear_tol = s.positive("linear_tol", 1e-10);
    c.max_linear_iters = s.integer("max_linear_iters", 10000);
    if (c.max_linear_iters < 1) s.fail("max_linear_iters", "must be positive");
    c.record_every = s.integer("record_every", 1);
    if (c.record_every < 1) s.fail("record_every", "must be positive");
    s.done();
    return c;
}

ScalarFunction read_f(Section s, int dim) {
    const std::string kind = s.choice("kind", {"bump", "log_radius", "heat_kernel"});
    ScalarFunction fn;
    if (kind == "bump") {
        const double amplitude = s.real("amplitude", 1.0);
        const double width = s.positive("width", 0.5);
        const double omega = s.real("omega", 0.0);
        fn = bump_function(amplitude, width, omega);
    } else if (kind == "log_radius") {
        const double b = s.real("b", 0.5);
        const double eps = s.positive("epsilon", 1e-2);
        fn.name = "log_radius";
        fn.eval = [b, eps](const Point& x, double) { return 0.5 * b * std::log(x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + eps); };
    } else {
        fn.name = "heat_kernel";
        fn.time_dependent = true;
        fn.eval = [dim](const Point& x, double t) {
            return (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / (4.0 * (t + 1.0)) + 0.5 * dim * std::log(t + 1.0);
        };
    }
    s.done();
    return fn;
}

struct PotentialBlock {
    PotentialSpec spec;
    std::optional<ScalarFunction> f;  // set for derivative-combination potentials
    double alpha = 1.0;
};

PotentialBlock read_potential(Section s, int dim) {
    PotentialBlock p;
    const std::string kind =
        s.choice("kind", {"zero", "constant", "inverse_square", "log_derived", "oscillating", "from_f"});
    if (kind == "zero") p.spec.kind = potential::Constant{0.0};
    else if (kind == "constant") p.spec.kind = potential::Constant{s.real("c")};
    else if (kind == "inverse_square") p.spec.kind = potential::InverseSquare{s.real("a")};
    else if (kind == "log_derived") p.spec.kind = potential::LogDerived{s.real("b")};
    else if (kind == "oscillating") {
        potential::Oscillating o;
        if (auto e = s.maybe_real("epsilon")) {
            if (!(*e > 0.0)) s.fail("epsilon", "must be positive");
            o.epsilon = *e;
        }
        p.spec.kind = o;
    } else {
        p.alpha = s.real("alpha", 1.0);
        if (p.alpha < 1.0) s.fail("alpha", "must be at least 1");
        p.f = read_f(s.sub("f", true), dim);
        p.spec.kind = potential::FromFunction{*p.f, p.alpha};
    }
    p.spec.support.radius = s.extent("support_radius");
    p.spec.support.duration = s.extent("support_duration");
    p.spec.coupling = s.real("coupling", 1.0);
    s.done();
    return p;
}

TruncationLadder read_ladder(Section s) {
    std::vector<double> upper = s.reals("upper");
    std::vector<double> lower = s.reals("lower", std::vector<double>{1e2, 1e3, 1e4});
    s.done();
    return TruncationLadder::make(std::move(upper), std::move(lower));
}

std::function<double(const Point&)> read_initial(Section s) {
    const std::string kind = s.choice("kind", {"gaussian", "ones", "bump"}, "gaussian");
    std::function<double(const Point&)> u0;
    if (kind == "gaussian") {
        const double width = s.positive("width", 0.25);
        const Point c = s.point("center", Point{0.0, 0.0, 0.0});
        u0 = [width, c](const Point& x) {
            double r2 = 0.0;
            for (std::size_t d = 0; d < 3; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
            return std::exp(-r2 / (width * width));
        };
    } else if (kind == "ones") {
        u0 = [](const Point&) { return 1.0; };
    } else {
        const ScalarFunction b = bump_function(1.0, s.positive("width", 0.5));
        u0 = [b](const Point& x) { return b.eval(x, 0.0); };
    }
    s.done();
    return u0;
}

RefinementPlan read_refinement(Section s) {
    RefinementPlan plan;
    plan.dim = s.integer("dim", 3);
    if (plan.dim < 1 || plan.dim > 3) s.fail("dim", "must be 1, 2 or 3");
    plan.half_width = s.positive("half_width", 1.5);
    plan.points = s.integers("points", std::vector<int>{16, 32, 64});
    if (plan.points.size() < 3) s.fail("points", "needs at least 3 refinement levels");
    for (std::size_t i = 0; i < plan.points.size(); ++i) {
        if (plan.points[i] < 8) s.fail("points", "levels must have at least 8 points");
        if (i > 0 && plan.points[i] <= plan.points[i - 1]) s.fail("points", "levels must increase");
    }
    plan.boundary = s.choice("boundary", {"dirichlet_zero", "periodic"}, "dirichlet_zero") == "periodic"
                        ? Boundary::periodic
                        : Boundary::dirichlet_zero;
    s.done();
    return plan;
}

struct ClassifyBlock {
    ClassifyOptions options;
    double dt = 0.01;  // slice spacing for time-dependent inputs
};

ClassifyBlock read_classify(Section s, std::optional<double> default_b = std::nullopt) {
    ClassifyBlock c;
    c.options.slope_tolerance = s.positive("slope_tolerance", 0.1);
    c.options.lp_tolerance = s.positive("lp_tolerance", 0.05);
    c.options.exponents = s.reals("exponents", std::vector<double>{2.0, 4.0, 8.0});
    for (double p : c.options.exponents)
        if (!(p > 1.0)) s.fail("exponents", "entries must exceed 1");
    c.options.convolution.horizon = s.positive("horizon", 1.0);
    c.options.convolution.outputs = static_cast<std::size_t>(s.integer("outputs", 5));
    if (c.options.convolution.outputs < 2) s.fail("outputs", "must be at least 2");
    if (default_b) {
        c.options.convolution.b = s.positive("b", *default_b);
    } else if (auto b = s.maybe_real("b")) {
        if (!(*b > 0.0)) s.fail("b", "must be positive");
        c.options.convolution.b = *b;
    }
    c.dt = s.positive("dt", 0.01);
    s.done();
    return c;
}

SpectralOptions read_spectral(Section s, std::optional<double> half_width) {
    SpectralOptions o;
    o.points = s.integers("points", std::vector<int>{32, 64, 128});
    if (o.points.size() < 3) s.fail("points", "needs at least 3 refinement levels");
    for (std::size_t i = 1; i < o.points.size(); ++i)
        if (o.points[i] <= o.points[i - 1]) s.fail("points", "levels must increase");
    o.half_width = half_width ? *half_width : s.positive("half_width", 1.0);
    o.b = s.real("b", 0.0);
    if (o.b < 0.0) s.fail("b", "must be non-negative");
    o.dt = s.positive("dt", 0.01);
    o.horizon = s.real("horizon", 0.0);
    o.use_symmetry = s.flag("use_symmetry", true);
    o.eigen.tol = s.positive("tol", 1e-7);
    o.eigen.max_iters = s.integer("max_iters", 200);
    s.done();
    return o;
}

// ---------------------------------------------------------------------------
// Report serialization.

json to_json(const KernelEstimate& e) {
    json j;
    j["source"] = e.source;
    j["source_time"] = e.source_time;
    j["t_min"] = e.t_min;
    j["upper_levels"] = e.ladder.upper;
    j["on_diagonal"] = e.on_diagonal;
    j["octave_growth"] = e.octave_growth;
    j["gaps"] = e.gaps;
    j["saturated"] = e.saturated;
    j["cauchy_gap"] = e.cauchy_gap;
    j["worst_monotonicity"] = e.worst_monotonicity;
    j["converged"] = e.converged;
    j["divergent"] = e.divergent;
    return j;
}

json to_json(const BoundFit& f) {
    json j;
    j["side"] = to_string(f.side);
    j["c"] = f.c;
    j["b"] = f.b;
    j["residual"] = f.residual;
    j["mean_log_gap"] = f.mean_log_gap;
    j["admissible"] = f.admissible;
    j["window"] = f.window;
    j["probe_count"] = f.probe_count;
    j["t_min"] = f.t_min;
    j["probe_radius"] = f.probe_radius;
    return j;
}

json to_json(const Classification& c) {
    json j;
    j["verdict"] = to_string(c.verdict);
    j["growth_exponent"] = c.growth_exponent;
    j["raw_slope"] = c.raw_slope;
    j["log_slope"] = c.log_slope;
    j["exponents"] = c.exponents;
    j["lp_change"] = c.lp_change;
    j["lp_stable"] = c.lp_stable;
    json levels = json::array();
    for (const auto& l : c.levels) {
        json e;
        e["points"] = l.points;
        e["spacing"] = l.spacing;
        e["sup"] = l.sup;
        e["scale"] = l.scale;
        e["lp"] = l.lp;
        levels.push_back(e);
    }
    j["levels"] = levels;
    return j;
}

json to_json(const SpectralReport& r) {
    json j;
    j["lambda_min"] = r.lambda_min;
    j["b"] = r.b;
    j["form_bounded"] = r.form_bounded;
    j["diverging"] = r.diverging;
    j["iterations"] = r.iterations;
    json trace = json::array();
    for (const auto& l : r.refinement_trace) {
        json e;
        e["points"] = l.points;
        e["spacing"] = l.spacing;
        e["lambda_min"] = l.lambda_min;
        e["lower_bound"] = l.lower_bound;
        e["time_average"] = l.time_average;
        e["worst_slice_time"] = l.worst_slice_time;
        e["iterations"] = l.iterations;
        e["linear_iterations"] = l.linear_iterations;
        e["reduced"] = l.reduced;
        trace.push_back(e);
    }
    j["refinement_trace"] = trace;
    return j;
}

json to_json(const LogTransform& t) {
    json j;
    j["max_abs_error"] = t.max_abs_error;
    j["relative_error"] = t.relative_error;
    j["pointwise_error"] = t.pointwise_error;
    j["rms_relative_error"] = t.rms_relative_error;
    j["window_nodes"] = t.window_nodes;
    return j;
}

json pairs_to_json(const std::vector<std::pair<double, double>>& v, const char* a, const char* b) {
    json out = json::array();
    for (const auto& [x, y] : v) out.push_back(json{{a, x}, {b, y}});
    return out;
}

// ---------------------------------------------------------------------------
// Running.

struct Output {
    std::filesystem::path dir;
    std::string prefix;
    bool json_out = true;
    bool csv = true;
    std::vector<std::string> artifacts;

    std::string path(const std::string& suffix) const { return (dir / (prefix + suffix)).string(); }

    std::ofstream open(const std::string& suffix) {
        std::filesystem::create_directories(dir);
        const std::string p = path(suffix);
        std::ofstream out(p);
        if (!out) throw ValidationError("cannot write " + p);
        out << std::setprecision(17);
        artifacts.push_back(p);
        return out;
    }
};

struct Context {
    json input;
    json resolved;
    std::string experiment;
    std::string mode;
};

using Runner = std::function<json(Output&, std::string& summary)>;

Section top(Context& ctx, const std::string& block, bool required) {
    const json* in = ctx.input.contains(block) && !ctx.input[block].is_null() ? &ctx.input[block] : nullptr;
    if (!in) {
        if (required)
            throw ValidationError("config is missing the '" + block + "' block required by " + ctx.experiment +
                                  (ctx.mode.empty() ? "" : "/" + ctx.mode));
        ctx.resolved[block] = nullptr;
        return Section(nullptr, &ctx.resolved, json::json_pointer("/" + block), block);
    }
    if (!in->is_object()) throw ValidationError("'" + block + "' must be an object");
    ctx.resolved[block] = json::object();
    return Section(in, &ctx.resolved, json::json_pointer("/" + block), block);
}

SpaceTimeField sample_f(const ScalarFunction& fn, const Grid& g, double dt, double horizon) {
    SpaceTimeField out(g, 0.0, dt);
    const auto steps = fn.time_dependent ? static_cast<std::size_t>(std::llround(horizon / dt)) : 0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = dt * static_cast<double>(k);
        out.push_back(ScalarField::sample(g, [&](const Point& x) { return fn.eval(x, t); }));
    }
    return out;
}

// inf F / sup F and sup F / inf F for F = e^{-alpha f} over the grid and the given slices.
std::pair<double, double> mass_sandwich(const ScalarFunction& f, double alpha, const Grid& g, double t_from,
                                        double t_to, double dt) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    const auto steps = f.time_dependent ? std::max<long>(1, std::lround((t_to - t_from) / dt)) : 0L;
    for (long k = 0; k <= steps; ++k) {
        const double t = t_from + (steps > 0 ? (t_to - t_from) * static_cast<double>(k) / static_cast<double>(steps) : 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double F = std::exp(-alpha * f.eval(g.position(i), t));
            lo = std::min(lo, F);
            hi = std::max(hi, F);
        }
    }
    return {lo / hi, hi / lo};
}

void write_axis_line(Output& out, const std::string& suffix, const ScalarField& u, const ScalarField& f) {
    if (!out.csv) return;
    std::ofstream csv = out.open(suffix);
    const Grid& g = u.grid;
    csv << "x,u,f\n";
    Index3 mid{g.points() / 2, g.points() / 2, g.points() / 2};
    for (int i = 0; i < g.points(); ++i) {
        Index3 idx = mid;
        idx[0] = i;
        for (int d = g.dim(); d < 3; ++d) idx[static_cast<std::size_t>(d)] = 0;
        const std::size_t n = g.flatten(idx);
        csv << g.coordinate(i) << ',' << u.values[n] << ',' << f.values[n] << '\n';
    }
}

void write_classification_csv(Output& out, const Classification& c) {
    if (!out.csv) return;
    std::ofstream csv = out.open("_refinement.csv");
    csv << "points,spacing,sup,scale";
    for (double p : c.exponents) csv << ",L" << p;
    csv << '\n';
    for (const auto& l : c.levels) {
        csv << l.points << ',' << l.spacing << ',' << l.sup << ',' << l.scale;
        for (double v : l.lp) csv << ',' << v;
        csv << '\n';
    }
}

// --- solve -----------------------------------------------------------------

Runner prepare_solve(Context& ctx) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    const SolverConfig solver0 = read_solver(top(ctx, "solver", false));
    const TimeBlock time = read_time(top(ctx, "time", true), grid, solver0.record_every);
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), grid.dim());
    const auto u0 = read_initial(top(ctx, "initial", true));
    std::optional<TruncationLadder> ladder;
    if (auto s = top(ctx, "ladder", false); s.present()) ladder = read_ladder(s);
    SolverConfig solver = solver0;
    solver.dt = time.dt;
    return [=](Output& out, std::string& summary) {
        const SpaceTimeField V = realize(pot.spec, grid, time.dt, time.horizon);
        const ScalarField init = ScalarField::sample(grid, u0);
        struct Case {
            double upper, lower;
        };
        std::vector<Case> cases;
        if (ladder) {
            for (double j : ladder->upper) cases.push_back({j, ladder->lower.back()});
            for (std::size_t k = 0; k + 1 < ladder->lower.size(); ++k)
                cases.push_back({ladder->upper.back(), ladder->lower[k]});
        } else {
            cases.push_back({std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
        }
        std::vector<std::optional<CauchySolution>> sols(cases.size());
        std::vector<double> residuals(cases.size());
        parallel_for(cases.size(), [&](std::size_t i) {
            SpaceTimeField Vc = V;
            if (std::isfinite(cases[i].upper)) Vc = truncate_below(truncate_above(V, cases[i].upper), cases[i].lower);
            sols[i] = solve_cauchy(init, Vc, solver, time.horizon);
            residuals[i] = duhamel_residual(*sols[i]);
        });
        json result;
        json levels = json::array();
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& d = sols[i]->diagnostics.back();
            json e;
            e["upper"] = std::isfinite(cases[i].upper) ? json(cases[i].upper) : json(nullptr);
            e["lower"] = std::isfinite(cases[i].lower) ? json(cases[i].lower) : json(nullptr);
            e["final_l1"] = d.l1;
            e["final_l2"] = d.l2;
            e["final_min"] = d.min;
            e["final_max"] = d.max;
            e["duhamel_residual"] = residuals[i];
            e["fallback_steps"] = sols[i]->fallback_steps;
            e["linear_iterations"] = sols[i]->linear_iterations;
            levels.push_back(e);
        }
        result["levels"] = levels;
        if (ladder) {
            // Raising the upper level or the lower floor must never decrease the solution.
            json orderings = json::array();
            const std::size_t nu = ladder->upper.size();
            auto order = [&](std::size_t a, std::size_t b, const char* which) {
                const OrderingReport r = compare_solutions(*sols[a], *sols[b]);
                orderings.push_back(json{{"ladder", which}, {"from", a}, {"to", b}, {"verdict", to_string(r.verdict)}});
            };
            for (std::size_t i = 0; i + 1 < nu; ++i) order(i, i + 1, "upper");
            for (std::size_t k = nu; k + 1 < cases.size(); ++k) order(k, k + 1, "lower");
            if (cases.size() > nu) order(cases.size() - 1, nu - 1, "lower");
            result["orderings"] = orderings;
        }
        if (out.csv) {
            std::ofstream csv = out.open("_diagnostics.csv");
            csv << "time,l1,l2,min,max\n";
            for (const auto& d : sols.back()->diagnostics)
                csv << d.time << ',' << d.l1 << ',' << d.l2 << ',' << d.min << ',' << d.max << '\n';
        }
        summary = "solved " + std::to_string(cases.size()) + " truncation level(s); duhamel residual " +
                  std::to_string(residuals.back());
        return result;
    };
}

// --- kernel ----------------------------------------------------------------

struct KernelSetup {
    Grid grid;
    PotentialBlock pot;
    TruncationLadder ladder;
    KernelConfig config;
    Point source{0.0, 0.0, 0.0};
    double source_time = 0.0;
};

KernelSetup read_kernel_setup(Context& ctx, Section& kernel) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    SolverConfig solver = read_solver(top(ctx, "solver", false));
    const TimeBlock time = read_time(top(ctx, "time", true), grid, solver.record_every);
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), grid.dim());
    const TruncationLadder ladder = read_ladder(top(ctx, "ladder", true));
    solver.dt = time.dt;
    KernelSetup k{grid, pot, ladder, KernelConfig{}, {0.0, 0.0, 0.0}, 0.0};
    k.config.solver = solver;
    k.config.horizon = time.horizon;
    k.config.lower_floor = ladder.lower.back();
    k.source = kernel.point("source", Point{0.0, 0.0, 0.0});
    k.source_time = kernel.real("source_time", 0.0);
    if (k.source_time < 0.0) kernel.fail("source_time", "must be non-negative");
    k.config.gap_tolerance = kernel.positive("gap_tolerance", 0.02);
    k.config.divergence_growth = kernel.positive("divergence_growth", 0.10);
    return k;
}

Runner prepare_kernel(Context& ctx) {
    Section kernel = top(ctx, "kernel", true);
    const KernelSetup k = read_kernel_setup(ctx, kernel);
    const bool require_convergence = kernel.flag("require_convergence", false);
    kernel.done();
    return [=](Output& out, std::string& summary) {
        const KernelEstimate est = estimate_kernel(k.pot.spec, k.source, k.source_time, k.ladder, k.grid, k.config);
        if (require_convergence && !est.converged)
            throw NumericalError(est.divergent ? "ladder divergence: on-diagonal value still growing " +
                                                     std::to_string(est.octave_growth.back() * 100.0) + "% per octave"
                                               : "kernel ladder has not converged (Cauchy gap " +
                                                     std::to_string(est.cauchy_gap) + ")");
        if (out.csv) {
            std::filesystem::create_directories(out.dir);
            write_kernel_csv(est, out.path("_kernel.csv"));
            out.artifacts.push_back(out.path("_kernel.csv"));
        }
        summary = std::string("kernel ladder ") + (est.converged ? "converged" : est.divergent ? "divergent" : "not converged") +
                  "; top on-diagonal value " + std::to_string(est.on_diagonal.back());
        return json{{"estimate", to_json(est)}};
    };
}

Runner prepare_feynman_kac(Context& ctx) {
    Section kernel = top(ctx, "kernel", true);
    const KernelSetup k = read_kernel_setup(ctx, kernel);
    const double p = kernel.real("p", 1.5);
    if (!(p > 1.0)) kernel.fail("p", "must exceed 1");
    const auto sources = kernel.points("sources", {k.source});
    const double slack = kernel.positive("slack", 0.05);
    kernel.done();
    return [=](Output&, std::string& summary) {
        const FeynmanKacReport r = feynman_kac_check(k.pot.spec, p, sources, k.grid, k.ladder, k.config, slack);
        summary = "Feynman-Kac interpolation: " + std::to_string(r.violations) + " of " + std::to_string(r.probes) +
                  " probes violate (slack " + std::to_string(slack) + ")";
        json j;
        j["p"] = r.p;
        j["slack"] = r.slack;
        j["probes"] = r.probes;
        j["violations"] = r.violations;
        j["violation_fraction"] = r.violation_fraction;
        j["worst_ratio"] = r.worst_ratio;
        return json{{"feynman_kac", j}};
    };
}

Runner prepare_mass(Context& ctx) {
    Section kernel = top(ctx, "kernel", true);
    const KernelSetup k = read_kernel_setup(ctx, kernel);
    // G_{alpha V} is the kernel whose mass the derivative-combination form pins down.
    const double coupling = kernel.real("mass_coupling", k.pot.alpha);
    const double tolerance = kernel.positive("tolerance", 0.05);
    kernel.done();
    return [=](Output& out, std::string& summary) {
        const double t = k.source_time + k.config.horizon;
        const ScalarField mass = mass_from_ones(k.pot.spec.scaled(coupling), k.source_time, t, k.grid, k.ladder, k.config);
        const Grid& g = k.grid;
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        std::vector<std::size_t> probes;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (g.radius(i) > 0.5 * g.half_width()) continue;
            probes.push_back(i);
            lo = std::min(lo, mass.values[i]);
            hi = std::max(hi, mass.values[i]);
        }
        json j;
        j["coupling"] = coupling;
        j["time"] = t;
        j["probes"] = probes.size();
        j["mass_min"] = lo;
        j["mass_max"] = hi;
        summary = "mass of the kernel over |x| <= L/2 lies in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
        if (k.pot.f) {
            const auto [lower, upper] = mass_sandwich(*k.pot.f, coupling, g, k.source_time, t, k.config.solver.dt);
            std::size_t inside = 0;
            for (std::size_t i : probes)
                if (mass.values[i] >= lower * (1.0 - tolerance) && mass.values[i] <= upper * (1.0 + tolerance)) ++inside;
            j["sandwich_lower"] = lower;
            j["sandwich_upper"] = upper;
            j["tolerance"] = tolerance;
            j["inside_fraction"] = static_cast<double>(inside) / static_cast<double>(std::max<std::size_t>(probes.size(), 1));
            summary += "; sandwich [" + std::to_string(lower) + ", " + std::to_string(upper) + "]";
        }
        if (out.csv) {
            std::ofstream csv = out.open("_mass.csv");
            csv << "x,mass\n";
            Index3 mid{g.points() / 2, g.points() / 2, g.points() / 2};
            for (int i = 0; i < g.points(); ++i) {
                Index3 idx = mid;
                idx[0] = i;
                for (int d = g.dim(); d < 3; ++d) idx[static_cast<std::size_t>(d)] = 0;
                csv << g.coordinate(i) << ',' << mass.values[g.flatten(idx)] << '\n';
            }
        }
        return json{{"mass", j}};
    };
}

// --- bounds ----------------------------------------------------------------

Runner prepare_bounds(Context& ctx) {
    Section kernel = top(ctx, "kernel", true);
    const KernelSetup k = read_kernel_setup(ctx, kernel);
    kernel.done();
    Section b = top(ctx, "bounds", false);
    const double kappa = b.positive("kappa", 4.0);
    const bool entropy = b.flag("entropy", true);
    Section norm = b.sub("operator_norm", false);
    const bool want_norm = norm.present();
    double alpha = 2.0, radius = 0.0;
    int stride = 1;
    if (want_norm) {
        alpha = norm.real("alpha", 2.0);
        if (!(alpha > 1.0)) norm.fail("alpha", "must exceed 1");
        stride = norm.integer("stride", 2);
        if (stride < 1) norm.fail("stride", "must be positive");
        radius = norm.positive("radius", 0.25 * k.grid.half_width());
        norm.done();
    }
    b.done();
    return [=](Output& out, std::string& summary) {
        const KernelEstimate est = estimate_kernel(k.pot.spec, k.source, k.source_time, k.ladder, k.grid, k.config);
        const BoundFit upper = fit_gaussian_upper(est);
        const BoundFit lower = fit_gaussian_lower(est, kappa);
        const auto profile = on_diagonal_profile(est);
        json result;
        result["estimate"] = to_json(est);
        result["upper"] = to_json(upper);
        result["lower"] = to_json(lower);
        result["on_diagonal_profile"] = pairs_to_json(profile, "tau", "scaled_value");
        if (entropy) {
            const SpaceTimeField V =
                realize(k.pot.spec, k.grid, k.config.solver.dt, k.source_time + k.config.horizon);
            const EntropyTrace trace = nash_entropy_trace(est, V);
            json e = json::array();
            for (std::size_t i = 0; i < trace.s.size(); ++i)
                e.push_back(json{{"s", trace.s[i]}, {"H", trace.H[i]}, {"M", trace.M[i]},
                                 {"nonpositive", trace.nonpositive[i]}});
            result["nash_entropy"] = e;
        }
        if (want_norm) {
            const SourceLattice lattice = make_source_lattice(k.grid, stride, radius);
            std::vector<std::optional<KernelEstimate>> ensemble(lattice.points.size());
            parallel_for(lattice.points.size(), [&](std::size_t m) {
                ensemble[m] = estimate_kernel(k.pot.spec, lattice.points[m], k.source_time, k.ladder, k.grid, k.config);
            });
            std::vector<KernelEstimate> members;
            for (auto& e : ensemble) members.push_back(std::move(*e));
            const OperatorNormReport r = operator_norm_diag(members, lattice, alpha);
            json n;
            n["alpha"] = r.alpha;
            n["constant"] = r.constant;
            n["dictionary_size"] = r.dictionary_size;
            n["lattice_points"] = lattice.points.size();
            n["per_lag"] = pairs_to_json(r.per_lag, "tau", "max_ratio");
            if (k.pot.f) {
                const auto [lo, hi] = mass_sandwich(*k.pot.f, alpha, k.grid, k.source_time,
                                                    k.source_time + k.config.horizon, k.config.solver.dt);
                (void)lo;
                n["reference"] = operator_norm_reference(k.grid.dim(), alpha, hi);
            } else {
                n["reference"] = nullptr;
            }
            result["operator_norm"] = n;
        }
        if (out.csv) {
            std::ofstream csv = out.open("_profile.csv");
            csv << "tau,scaled_value\n";
            for (const auto& [tau, v] : profile) csv << tau << ',' << v << '\n';
        }
        summary = "upper fit c=" + std::to_string(upper.c) + " b=" + std::to_string(upper.b) +
                  "; lower fit c=" + std::to_string(lower.c) + " b=" + std::to_string(lower.b);
        return result;
    };
}

// --- kato ------------------------------------------------------------------

Runner prepare_classify(Context& ctx) {
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), 3);
    const RefinementPlan plan = read_refinement(top(ctx, "refinement", true));
    const ClassifyBlock cls = read_classify(top(ctx, "classify", false));
    return [=](Output& out, std::string& summary) {
        const FieldSource source = potential_source(pot.spec, cls.dt, cls.options.convolution.horizon);
        const Classification c = classify(source, plan, cls.options);
        write_classification_csv(out, c);
        summary = "verdict " + to_string(c.verdict) + " (growth exponent " + std::to_string(c.growth_exponent) + ")";
        return json{{"input", source.name}, {"classification", to_json(c)}};
    };
}

Runner prepare_gradient_square(Context& ctx) {
    const RefinementPlan plan = read_refinement(top(ctx, "refinement", true));
    const ScalarFunction f = read_f(top(ctx, "f", true), plan.dim);
    const ClassifyBlock cls = read_classify(top(ctx, "classify", false), 0.25);
    return [=](Output& out, std::string& summary) {
        FieldSource source;
        source.name = f.name;
        source.sample = [f, cls](const Grid& g) {
            return sample_f(f, g, cls.dt, f.time_dependent ? cls.options.convolution.horizon : 0.0);
        };
        const GradientSquareReport r = gradient_square_heat_test(source, *cls.options.convolution.b, plan, cls.options);
        write_classification_csv(out, r.classification);
        summary = std::string("g_b * |grad f|^2 ") + (r.bounded ? "bounded" : "not bounded") + " (sup " +
                  std::to_string(r.sup_trace.back()) + ")";
        return json{{"b", r.b}, {"sup_trace", r.sup_trace}, {"bounded", r.bounded},
                    {"classification", to_json(r.classification)}};
    };
}

Runner prepare_form_bounded_ahb(Context& ctx) {
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), 3);
    const RefinementPlan plan = read_refinement(top(ctx, "refinement", true));
    const ClassifyBlock cls = read_classify(top(ctx, "classify", false));
    const SpectralOptions spectral = read_spectral(top(ctx, "spectral", false), std::nullopt);
    return [=](Output& out, std::string& summary) {
        SpectralOptions s = spectral;
        s.dt = cls.dt;
        const FormBoundedAhbReport r = form_bounded_implies_ahb_experiment(pot.spec, s, plan, cls.options);
        write_classification_csv(out, r.classification);
        summary = std::string("form bounded: ") + (r.form_bounded ? "yes" : "no") +
                  "; almost heat bounded: " + (r.almost_heat_bounded ? "yes" : "no");
        return json{{"form_bounded", r.form_bounded}, {"almost_heat_bounded", r.almost_heat_bounded},
                    {"spectral", to_json(r.spectral)}, {"classification", to_json(r.classification)}};
    };
}

// --- positivity ------------------------------------------------------------

ShellWindow read_window(Section& s) {
    ShellWindow w;
    Section win = s.sub("window", false);
    if (win.present()) {
        w.r_in = win.real("r_in", 0.0);
        w.r_out = win.real("r_out", 0.0);
        w.t_from = win.real("t_from", 0.0);
        win.done();
    }
    return w;
}

ShellWindow default_window(ShellWindow w, const Grid& g, const PotentialSpec& spec) {
    if (w.r_out > 0.0) return w;
    w.r_in = 4.0 * g.spacing();
    w.r_out = 0.5 * std::min(spec.support.radius, g.half_width());
    return w;
}

Runner prepare_forward(Context& ctx) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    const TimeBlock time = read_time(top(ctx, "time", true), grid, 1);
    const ScalarFunction f = read_f(top(ctx, "f", true), grid.dim());
    return [=](Output&, std::string& summary) {
        const ForwardReport r = forward_positive_solution(sample_f(f, grid, time.dt, time.horizon));
        summary = "residual of e^{-f} against its derivative-combination potential: " + std::to_string(r.residual);
        return json{{"residual", r.residual}, {"residual_max", r.residual_max}, {"slices", r.u.size()}};
    };
}

Runner prepare_roundtrip(Context& ctx) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    SolverConfig solver = read_solver(top(ctx, "solver", false));
    const TimeBlock time = read_time(top(ctx, "time", true), grid, solver.record_every);
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), grid.dim());
    const TruncationLadder ladder = read_ladder(top(ctx, "ladder", true));
    const auto u0 = read_initial(top(ctx, "initial", true));
    Section p = top(ctx, "positivity", false);
    const ShellWindow window = read_window(p);
    p.done();
    solver.dt = time.dt;
    return [=](Output&, std::string& summary) {
        const SpaceTimeField V = realize(pot.spec, grid, time.dt, time.horizon);
        const SpaceTimeField Vj = truncate_below(truncate_above(V, ladder.upper.back()), ladder.lower.back());
        const CauchySolution sol = solve_cauchy(ScalarField::sample(grid, u0), Vj, solver, time.horizon);
        const LogTransform t = recover_f(sol, default_window(window, grid, pot.spec));
        summary = "recovered potential: pointwise relative error " + std::to_string(t.pointwise_error);
        return json{{"roundtrip", to_json(t)}};
    };
}

Runner prepare_spectral(Context& ctx) {
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), 3);
    const SpectralOptions spectral = read_spectral(top(ctx, "spectral", false), std::nullopt);
    return [=](Output&, std::string& summary) {
        const SpectralReport r = form_bounded_test(pot.spec, spectral);
        summary = "lambda_min " + std::to_string(r.lambda_min) + (r.form_bounded ? "; form bounded" : "; not form bounded");
        return json{{"spectral", to_json(r)}};
    };
}

Runner prepare_ground_state(Context& ctx) {
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), 3);
    const SpectralOptions spectral = read_spectral(top(ctx, "spectral", false), std::nullopt);
    return [=](Output& out, std::string& summary) {
        const GroundStateLog g = ground_state_log(pot.spec, spectral);
        write_axis_line(out, "_ground_state.csv", g.state.u, g.f);
        summary = "ground state found; identity residual " + std::to_string(g.identity_residual) + " after shift " +
                  std::to_string(g.shift);
        return json{{"spectral", to_json(g.spectral)}, {"lambda", g.state.lambda}, {"shift", g.shift},
                    {"identity_residual", g.identity_residual}, {"identity_rms", g.identity_rms}};
    };
}

Runner prepare_corollary1(Context& ctx) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    if (grid.periodic()) throw ValidationError("'grid.boundary' must be dirichlet_zero for corollary1");
    SolverConfig solver = read_solver(top(ctx, "solver", false));
    const TimeBlock time = read_time(top(ctx, "time", true), grid, solver.record_every);
    const PotentialBlock pot = read_potential(top(ctx, "potential", true), grid.dim());
    const TruncationLadder ladder = read_ladder(top(ctx, "ladder", true));
    const auto u0 = read_initial(top(ctx, "initial", true));
    const SpectralOptions spectral = read_spectral(top(ctx, "spectral", false), grid.half_width());
    Section p = top(ctx, "positivity", false);
    CorollaryOptions options;
    options.slack = p.positive("slack", 0.01);
    options.probe = p.point("probe", Point{0.25, 0.0, 0.0});
    options.window = read_window(p);
    p.done();
    solver.dt = time.dt;
    options.spectral = spectral;
    options.points = grid.points();
    options.solver = solver;
    options.horizon = time.horizon;
    options.lower_floor = ladder.lower.back();
    return [=](Output&, std::string& summary) {
        const CorollaryReport r = corollary1_experiment(pot.spec, u0, ladder, options);
        json levels = json::array();
        for (const auto& l : r.levels)
            levels.push_back(json{{"level", l.level}, {"energy_ratio", l.energy_ratio}, {"probe_value", l.probe_value}});
        summary = "energy bound holds with b=" + std::to_string(r.b) + "; ladder " +
                  (r.saturated ? "saturates" : "still growing") + "; round-trip error " +
                  std::to_string(r.roundtrip.pointwise_error);
        return json{{"spectral", to_json(r.spectral)}, {"b", r.b}, {"slack", r.slack}, {"levels", levels},
                    {"saturation_growth", r.saturation_growth}, {"saturated", r.saturated},
                    {"roundtrip", to_json(r.roundtrip)}};
    };
}

// --- nse -------------------------------------------------------------------

FlowFamily read_family(Section& s) {
    const std::string family = s.choice("family", {"taylor_green", "abc", "random_solenoidal"}, "taylor_green");
    if (family == "abc") return flow::Abc{s.real("A", 1.0), s.real("B", 1.0), s.real("C", 1.0)};
    if (family == "random_solenoidal") {
        flow::RandomSolenoidal r;
        r.seed = s.seed("seed");
        r.max_wavenumber = s.integer("max_wavenumber", 2);
        if (r.max_wavenumber < 1) s.fail("max_wavenumber", "must be positive");
        return r;
    }
    return flow::TaylorGreen{};
}

Runner prepare_nse_identity(Context& ctx) {
    const Grid grid = read_grid(top(ctx, "grid", true));
    if (!grid.periodic() || grid.dim() != 3)
        throw ValidationError("nse experiments need a periodic three-dimensional grid");
    Section s = top(ctx, "nse", true);
    const FlowFamily family = read_family(s);
    s.done();
    return [=](Output& out, std::string& summary) {
        const FlowField flow = synthetic_flow(family, grid);
        const StretchingField alpha = stretching_alpha(flow);
        const QField q = compute_Q(flow);
        std::size_t masked = 0;
        for (auto m : q.mask) masked += m;
        json j;
        j["div_residual"] = flow.div_residual;
        j["identity_gap"] = q.identity_gap;
        j["cross_term_max"] = q.cross_term_max;
        j["mask_fraction"] = static_cast<double>(masked) / static_cast<double>(grid.size());
        j["alpha_min"] = alpha.alpha.min();
        j["alpha_max"] = alpha.alpha.max();
        j["q_min"] = q.q_form_A.min();
        j["q_max"] = q.q_form_A.max();
        if (out.csv) {
            std::ofstream f = out.open("_flow.csv");
            write_flow_csv(f, flow);
            std::ofstream g = out.open("_q.csv");
            write_q_csv(g, q);
        }
        summary = "Q identity gap " + std::to_string(q.identity_gap) + "; div residual " + std::to_string(flow.div_residual);
        return json{{"q", j}};
    };
}

Runner prepare_nse_classify(Context& ctx) {
    Section s = top(ctx, "nse", true);
    const std::string input = s.choice("input", {"flow_series", "spike"}, "flow_series");
    QSeriesSource series;
    if (input == "flow_series") {
        const FlowFamily family = read_family(s);
        const double horizon = s.positive("horizon", 1.0);
        const int slices = s.integer("slices", 5);
        if (slices < 1) s.fail("slices", "must be positive");
        const double decay = s.real("decay", 0.0);
        if (decay < 0.0) s.fail("decay", "must be non-negative");
        series = flow_series(family, horizon, slices, decay);
    } else {
        const double T = s.positive("blow_up_time", 1.0);
        const Point c = s.point("center", Point{0.0, 0.0, 0.0});
        const double r = s.positive("radius", 0.5);
        series = manufactured_spike(T, c, r);
    }
    s.done();
    RefinementPlan plan = read_refinement(top(ctx, "refinement", true));
    if (plan.dim != 3 || plan.boundary != Boundary::periodic)
        throw ValidationError("'refinement' must be periodic and three-dimensional for nse/classify");
    const ClassifyBlock cls = read_classify(top(ctx, "classify", false));
    return [=](Output& out, std::string& summary) {
        const QHeatReport r = q_heat_bounded_check(series, plan, cls.options);
        write_classification_csv(out, r.classification);
        summary = "Q on {|w| >= 1}: " + to_string(r.classification.verdict) + (r.vacuous ? " (vacuous: empty mask)" : "");
        return json{{"mask_fraction", r.mask_fraction}, {"vacuous", r.vacuous},
                    {"classification", to_json(r.classification)}};
    };
}

// ---------------------------------------------------------------------------

struct ExperimentDef {
    CatalogEntry entry;
    std::function<Runner(Context&)> prepare;
};

const std::vector<ExperimentDef>& definitions() {
    static const std::vector<ExperimentDef> defs = {
        {{"solve", "Thm 2.2", "Cauchy problem along the truncation ladder, with Duhamel residual and ordering checks",
          {"grid", "time", "potential", "initial"}},
         prepare_solve},
        {{"kernel", "Thm 2.2", "fundamental solution as the monotone limit of truncated kernels",
          {"grid", "time", "potential", "ladder", "kernel"}},
         prepare_kernel},
        {{"kernel/feynman_kac", "Thm 2.2", "interpolation inequality G_V <= G_pV^(1/p) G_0^((p-1)/p)",
          {"grid", "time", "potential", "ladder", "kernel"}},
         prepare_feynman_kac},
        {{"kernel/mass", "Thm 2.2", "mass of G_(alpha V) against the inf F / sup F sandwich",
          {"grid", "time", "potential", "ladder", "kernel"}},
         prepare_mass},
        {{"bounds", "Thm 2.2", "two-sided Gaussian fits, on-diagonal profile, Nash entropy, operator norm",
          {"grid", "time", "potential", "ladder", "kernel"}},
         prepare_bounds},
        {{"kato", "Def 3.1", "heat bounded / almost heat bounded classification by refinement",
          {"potential", "refinement"}},
         prepare_classify},
        {{"kato/gradient_square", "Thm 2.2", "g_b * |grad f|^2 boundedness under refinement", {"f", "refinement"}},
         prepare_gradient_square},
        {{"kato/form_bounded_ahb", "Def 3.1", "form bounded potentials are almost heat bounded",
          {"potential", "refinement"}},
         prepare_form_bounded_ahb},
        {{"positivity/forward", "Thm 2.1", "u = e^(-f) solves the equation with V = Lap f - |grad f|^2 - d_t f",
          {"grid", "time", "f"}},
         prepare_forward},
        {{"positivity/roundtrip", "Thm 2.1", "recover V from a positive solution through f = -ln w",
          {"grid", "time", "potential", "ladder", "initial"}},
         prepare_roundtrip},
        {{"positivity/spectral", "Thm 2.1", "discrete spectral bottom of -Lap - V under refinement", {"potential"}},
         prepare_spectral},
        {{"positivity/ground_state", "Thm 2.1", "principal eigenfunction and its log transform", {"potential"}},
         prepare_ground_state},
        {{"positivity/corollary1", "Thm 2.1", "L^2 energy bound and saturation of the ladder for form bounded V",
          {"grid", "time", "potential", "ladder", "initial"}},
         prepare_corollary1},
        {{"nse", "Thm 4.1", "vortex stretching alpha and both forms of Q on a synthetic flow", {"grid", "nse"}},
         prepare_nse_identity},
        {{"nse/classify", "Thm 4.1", "heat boundedness of Q on {|w| >= 1} over a flow series or manufactured spike",
          {"nse", "refinement"}},
         prepare_nse_classify},
    };
    return defs;
}

// Also the order of blocks in the resolved config.
const std::vector<std::string> block_order = {"grid",     "time",     "solver", "potential",  "f",   "ladder",
                                              "initial",  "kernel",   "bounds", "refinement", "classify",
                                              "spectral", "positivity", "nse",  "output"};
const std::set<std::string> known_blocks(block_order.begin(), block_order.end());

struct Prepared {
    Context ctx;
    Runner runner;
    std::string name;
};

Prepared prepare(const std::string& text) {
    Prepared p;
    Context& ctx = p.ctx;
    try {
        ctx.input = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!ctx.input.is_object()) throw ValidationError("config must be a JSON object");
    if (!ctx.input.contains("schema_version") || !ctx.input["schema_version"].is_number_integer())
        throw ValidationError("config needs an integer 'schema_version'");
    if (ctx.input["schema_version"].get<int>() != config_schema_version)
        throw ValidationError("unsupported schema_version (expected " + std::to_string(config_schema_version) + ")");
    if (!ctx.input.contains("experiment") || !ctx.input["experiment"].is_string())
        throw ValidationError("config needs an 'experiment' name");
    ctx.experiment = ctx.input["experiment"].get<std::string>();
    if (ctx.input.contains("mode") && !ctx.input["mode"].is_null()) {
        if (!ctx.input["mode"].is_string()) throw ValidationError("'mode' must be a string");
        ctx.mode = ctx.input["mode"].get<std::string>();
    }
    for (const auto& [key, value] : ctx.input.items())
        if (key != "schema_version" && key != "experiment" && key != "mode" && !known_blocks.count(key))
            throw ValidationError("unknown top-level key '" + key + "'");
    p.name = ctx.mode.empty() ? ctx.experiment : ctx.experiment + "/" + ctx.mode;
    const auto& defs = definitions();
    const auto def = std::find_if(defs.begin(), defs.end(), [&](const ExperimentDef& d) { return d.entry.name == p.name; });
    if (def == defs.end()) throw ValidationError("unknown experiment '" + p.name + "' (see 'shlab list')");

    ctx.resolved["schema_version"] = config_schema_version;
    ctx.resolved["experiment"] = ctx.experiment;
    ctx.resolved["mode"] = ctx.mode.empty() ? json(nullptr) : json(ctx.mode);
    for (const auto& block : def->entry.blocks)
        if (!ctx.input.contains(block) || ctx.input[block].is_null())
            throw ValidationError("config is missing the '" + block + "' block required by " + p.name);
    p.runner = def->prepare(ctx);

    Section out = top(ctx, "output", false);
    std::string prefix = p.name;
    std::replace(prefix.begin(), prefix.end(), '/', '_');
    out.text("prefix", prefix);
    for (const auto& f : out.texts("formats", std::vector<std::string>{"json", "csv"}))
        if (f != "json" && f != "csv") out.fail("formats", "entries must be json or csv");
    out.done();
    for (const auto& [key, value] : ctx.input.items())
        if (known_blocks.count(key) && !ctx.resolved.contains(key))
            throw ValidationError("block '" + key + "' is not used by experiment " + p.name);
    json ordered;
    for (const char* key : {"schema_version", "experiment", "mode"}) ordered[key] = ctx.resolved[key];
    for (const auto& block : block_order)
        if (ctx.resolved.contains(block)) ordered[block] = ctx.resolved[block];
    ctx.resolved = std::move(ordered);
    return p;
}

} // namespace

const std::vector<CatalogEntry>& experiment_catalog() {
    static const std::vector<CatalogEntry> entries = [] {
        std::vector<CatalogEntry> v;
        for (const auto& d : definitions()) v.push_back(d.entry);
        return v;
    }();
    return entries;
}

std::string catalog_text() {
    std::ostringstream os;
    for (const auto& e : experiment_catalog()) {
        os << std::left << std::setw(26) << e.name << std::setw(10) << e.label << e.summary << "\n";
        os << std::setw(36) << "" << "blocks: ";
        for (std::size_t i = 0; i < e.blocks.size(); ++i) os << (i ? ", " : "") << e.blocks[i];
        os << "\n";
    }
    return os.str();
}

std::string resolve_config(const std::string& text) { return prepare(text).ctx.resolved.dump(2); }

RunOutput run_experiment(const std::string& config_text, const std::string& output_dir) {
    Prepared p = prepare(config_text);
    Output out;
    out.dir = output_dir.empty() ? std::filesystem::path(".") : std::filesystem::path(output_dir);
    const json& o = p.ctx.resolved["output"];
    out.prefix = o["prefix"].get<std::string>();
    std::vector<std::string> formats = o["formats"].get<std::vector<std::string>>();
    out.json_out = std::find(formats.begin(), formats.end(), "json") != formats.end();
    out.csv = std::find(formats.begin(), formats.end(), "csv") != formats.end();

    RunOutput result;
    json report;
    report["schema_version"] = config_schema_version;
    report["experiment"] = p.name;
    report["config"] = p.ctx.resolved;
    report["result"] = p.runner(out, result.summary);
    report["status"] = "ok";
    result.json = report.dump(2) + "\n";
    if (out.json_out) {
        std::ofstream f = out.open(".json");
        f << result.json;
    }
    result.artifacts = out.artifacts;
    return result;
}

} // namespace shlab
