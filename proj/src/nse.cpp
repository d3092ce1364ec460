#include "shlab/nse.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "shlab/parallel.hpp"

namespace shlab {

namespace {

void require_flow_grid(const Grid& g) {
    if (!g.periodic() || g.dim() != 3) throw ValidationError("flow fields need a periodic three-dimensional grid");
}

double norm2(const VectorField& v, std::size_t i) {
    return v.components[0][i] * v.components[0][i] + v.components[1][i] * v.components[1][i] +
           v.components[2][i] * v.components[2][i];
}

// Periodic central difference along one axis. Form B uses this instead of the
// grid operators so the two forms share no derivative code besides curl.
std::vector<double> periodic_derivative(const Grid& g, const std::vector<double>& f, int axis) {
    const std::size_t s = g.stride(axis);
    const auto n = static_cast<std::size_t>(g.points());
    const double inv = 0.5 / g.spacing();
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const std::size_t k = (i / s) % n;
        const std::size_t base = i - k * s;
        const std::size_t up = base + ((k + 1) % n) * s;
        const std::size_t down = base + ((k + n - 1) % n) * s;
        out[i] = (f[up] - f[down]) * inv;
    }
    return out;
}

VectorField sample_potential(const flow::RandomSolenoidal& r, const Grid& g, double kappa) {
    require(r.max_wavenumber >= 1, "random flow needs max_wavenumber >= 1");
    struct Mode {
        Index3 k;
        Point a, b;
    };
    std::mt19937_64 rng(r.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Mode> modes;
    const int K = r.max_wavenumber;
    for (int kx = -K; kx <= K; ++kx)
        for (int ky = -K; ky <= K; ++ky)
            for (int kz = -K; kz <= K; ++kz) {
                const int k2 = kx * kx + ky * ky + kz * kz;
                if (k2 == 0 || k2 > K * K) continue;
                Mode m{{kx, ky, kz}, {}, {}};
                const double amp = 1.0 / static_cast<double>(k2);
                for (double& v : m.a) v = amp * normal(rng);
                for (double& v : m.b) v = amp * normal(rng);
                modes.push_back(m);
            }
    VectorField A(g);
    parallel_for(g.size(), [&](std::size_t i) {
        const Point x = g.position(i);
        Point v{0.0, 0.0, 0.0};
        for (const Mode& m : modes) {
            const double phase = kappa * (m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2]);
            const double c = std::cos(phase), s = std::sin(phase);
            for (std::size_t d = 0; d < 3; ++d) v[d] += m.a[d] * c + m.b[d] * s;
        }
        for (std::size_t d = 0; d < 3; ++d) A.components[d][i] = v[d];
    });
    return A;
}

} // namespace

FlowField make_flow(VectorField u) {
    require_flow_grid(u.grid);
    VectorField w = curl(u);
    const double div = divergence(u).max_abs();
    return FlowField{std::move(u), std::move(w), div};
}

FlowField synthetic_flow(const FlowFamily& family, const Grid& grid) {
    require_flow_grid(grid);
    const double kappa = std::numbers::pi / grid.half_width();
    if (const auto* r = std::get_if<flow::RandomSolenoidal>(&family)) {
        VectorField u = curl(sample_potential(*r, grid, kappa));
        double peak = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) peak = std::max(peak, norm2(u, i));
        peak = std::sqrt(peak);
        if (peak > 0.0)
            for (auto& c : u.components)
                for (double& v : c) v /= peak;
        return make_flow(std::move(u));
    }
    if (const auto* abc = std::get_if<flow::Abc>(&family)) {
        return make_flow(VectorField::sample(grid, [&](const Point& p) {
            const double x = kappa * p[0], y = kappa * p[1], z = kappa * p[2];
            return Point{abc->a * std::sin(z) + abc->c * std::cos(y), abc->b * std::sin(x) + abc->a * std::cos(z),
                         abc->c * std::sin(y) + abc->b * std::cos(x)};
        }));
    }
    return make_flow(VectorField::sample(grid, [&](const Point& p) {
        const double x = kappa * p[0], y = kappa * p[1], z = kappa * p[2];
        return Point{std::sin(x) * std::cos(y) * std::cos(z), -std::cos(x) * std::sin(y) * std::cos(z), 0.0};
    }));
}

StretchingField stretching_alpha(const FlowField& flow) {
    const Grid& g = flow.u.grid;
    require_flow_grid(g);
    StretchingField out{ScalarField(g), std::vector<std::uint8_t>(g.size(), 0)};
    double wmax = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) wmax = std::max(wmax, norm2(flow.w, i));
    const double floor = 1e-12 * std::max(1.0, std::sqrt(wmax));
    // Numerator accumulated one velocity component at a time: w_i (d_j u_i) w_j.
    for (int c = 0; c < 3; ++c) {
        const VectorField du = gradient(ScalarField(g, flow.u.components[static_cast<std::size_t>(c)]));
        const auto& wc = flow.w.components[static_cast<std::size_t>(c)];
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < 3; ++j) s += du.components[j][i] * flow.w.components[j][i];
            out.alpha.values[i] += wc[i] * s;
        }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w2 = norm2(flow.w, i);
        if (std::sqrt(w2) > floor) {
            out.alpha.values[i] /= w2;
            out.evaluated[i] = 1;
        } else {
            out.alpha.values[i] = 0.0;
        }
    }
    return out;
}

QField compute_Q(const FlowField& flow) {
    const Grid& g = flow.u.grid;
    require_flow_grid(g);
    const std::size_t n = g.size();
    QField q{ScalarField(g), ScalarField(g), std::vector<std::uint8_t>(n, 0), 0.0,
             ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), 0.0};

    // Form A: alpha and f = ln(|w|^2 + 1) / 2 through the grid gradient.
    const StretchingField alpha = stretching_alpha(flow);
    ScalarField f(g);
    for (std::size_t i = 0; i < n; ++i) {
        const double w2 = norm2(flow.w, i);
        f.values[i] = 0.5 * std::log(w2 + 1.0);
        q.stretch.values[i] = alpha.alpha.values[i] * w2 / (w2 + 1.0);
        q.mask[i] = w2 >= 1.0 ? 1 : 0;
    }
    const VectorField gf = gradient(f);
    for (std::size_t i = 0; i < n; ++i) {
        double adv = 0.0, sq = 0.0;
        for (std::size_t d = 0; d < 3; ++d) {
            adv += flow.u.components[d][i] * gf.components[d][i];
            sq += gf.components[d][i] * gf.components[d][i];
        }
        q.advect.values[i] = adv;
        q.grad_f.values[i] = 2.0 * sq;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const VectorField gw = gradient(ScalarField(g, flow.w.components[c]));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t d = 0; d < 3; ++d) q.grad_w.values[i] += gw.components[d][i] * gw.components[d][i];
    }
    for (std::size_t i = 0; i < n; ++i) {
        q.grad_w.values[i] /= norm2(flow.w, i) + 1.0;
        q.q_form_A.values[i] = q.stretch.values[i] - q.advect.values[i] + q.grad_f.values[i] - q.grad_w.values[i];
    }

    // Form B: [curl(u x w) . w + 2 |grad sqrt(|w|^2 + 1)|^2 - |grad w|^2] / (|w|^2 + 1).
    VectorField cross(g);
    const auto& u = flow.u.components;
    const auto& w = flow.w.components;
    for (std::size_t i = 0; i < n; ++i) {
        cross.components[0][i] = u[1][i] * w[2][i] - u[2][i] * w[1][i];
        cross.components[1][i] = u[2][i] * w[0][i] - u[0][i] * w[2][i];
        cross.components[2][i] = u[0][i] * w[1][i] - u[1][i] * w[0][i];
    }
    const VectorField c = curl(cross);
    std::vector<double> root(n), numerator(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double term = c.components[0][i] * w[0][i] + c.components[1][i] * w[1][i] + c.components[2][i] * w[2][i];
        q.cross_term_max = std::max(q.cross_term_max, std::abs(term));
        numerator[i] = term;
        root[i] = std::sqrt(w[0][i] * w[0][i] + w[1][i] * w[1][i] + w[2][i] * w[2][i] + 1.0);
    }
    for (int axis = 0; axis < 3; ++axis) {
        const std::vector<double> dr = periodic_derivative(g, root, axis);
        for (std::size_t i = 0; i < n; ++i) numerator[i] += 2.0 * dr[i] * dr[i];
        for (std::size_t comp = 0; comp < 3; ++comp) {
            const std::vector<double> dw = periodic_derivative(g, w[comp], axis);
            for (std::size_t i = 0; i < n; ++i) numerator[i] -= dw[i] * dw[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        q.q_form_B.values[i] = numerator[i] / (root[i] * root[i]);
        const double a = q.q_form_A.values[i];
        q.identity_gap = std::max(q.identity_gap, std::abs(a - q.q_form_B.values[i]) / (1.0 + std::abs(a)));
    }
    return q;
}

QSeriesSource flow_series(FlowFamily family, double horizon, int slices, double decay) {
    require(slices >= 1, "flow series needs at least one slice");
    require(slices == 1 || horizon > 0.0, "flow series horizon must be positive");
    require(decay >= 0.0, "decay rate must be non-negative");
    return [=](const Grid& g) {
        const FlowField base = synthetic_flow(family, g);
        QSeries series;
        series.dt = slices > 1 ? horizon / (slices - 1) : 1.0;
        for (int k = 0; k < slices; ++k) {
            const double amp = std::exp(-decay * series.dt * k);
            if (amp == 1.0 && k > 0) {
                series.fields.push_back(series.fields.front());
                continue;
            }
            FlowField f = base;
            for (auto* field : {&f.u, &f.w})
                for (auto& comp : field->components)
                    for (double& v : comp) v *= amp;
            f.div_residual *= amp;
            series.fields.push_back(compute_Q(f));
        }
        return series;
    };
}

QSeriesSource manufactured_spike(double blow_up_time, Point center, double radius) {
    require(blow_up_time > 0.0, "blow-up time must be positive");
    require(radius > 0.0, "spike radius must be positive");
    return [=](const Grid& g) {
        QSeries series;
        const int slices = std::max(4, g.points() / 2);
        series.dt = blow_up_time / slices;
        for (int k = 0; k < slices; ++k) {
            const double value = 1.0 / (blow_up_time - series.dt * k);
            QField q{ScalarField(g), ScalarField(g), std::vector<std::uint8_t>(g.size(), 0), 0.0,
                     ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), 0.0};
            for (std::size_t i = 0; i < g.size(); ++i) {
                const Point x = g.position(i);
                double r2 = 0.0;
                for (int d = 0; d < g.dim(); ++d) {
                    const double dx = x[static_cast<std::size_t>(d)] - center[static_cast<std::size_t>(d)];
                    r2 += dx * dx;
                }
                if (r2 > radius * radius) continue;
                q.mask[i] = 1;
                q.q_form_A.values[i] = q.q_form_B.values[i] = q.stretch.values[i] = value;
            }
            series.fields.push_back(std::move(q));
        }
        return series;
    };
}

QHeatReport q_heat_bounded_check(const QSeriesSource& series, const RefinementPlan& plan,
                                 const ClassifyOptions& options) {
    require(!plan.points.empty(), "refinement plan is empty");
    std::vector<double> fractions(plan.points.size(), 0.0);
    FieldSource source;
    source.name = "Q on {|w| >= 1}";
    source.sample = [&](const Grid& g) {
        const QSeries s = series(g);
        require(!s.fields.empty(), "Q series is empty");
        SpaceTimeField out(g, s.t0, s.dt);
        std::size_t inside = 0;
        for (const QField& q : s.fields) {
            require(q.q_form_A.grid == g, "Q series slices must share the grid");
            ScalarField masked(g);
            for (std::size_t i = 0; i < g.size(); ++i) {
                if (!q.mask[i]) continue;
                masked.values[i] = q.q_form_A.values[i];
                ++inside;
            }
            out.push_back(std::move(masked));
        }
        const auto level = std::find(plan.points.begin(), plan.points.end(), g.points()) - plan.points.begin();
        if (static_cast<std::size_t>(level) < fractions.size())
            fractions[static_cast<std::size_t>(level)] =
                static_cast<double>(inside) / static_cast<double>(g.size() * s.fields.size());
        return out;
    };
    QHeatReport report;
    report.classification = classify(source, plan, options);
    report.mask_fraction = fractions.back();
    report.vacuous = std::all_of(fractions.begin(), fractions.end(), [](double f) { return f == 0.0; });
    return report;
}

void write_flow_csv(std::ostream& out, const FlowField& flow) {
    const Grid& g = flow.u.grid;
    out << "# grid dim=" << g.dim() << " half_width=" << std::setprecision(17) << g.half_width()
        << " points=" << g.points() << " boundary=periodic\n";
    out << "x,y,z,u1,u2,u3\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.position(i);
        out << x[0] << ',' << x[1] << ',' << x[2] << ',' << flow.u.components[0][i] << ','
            << flow.u.components[1][i] << ',' << flow.u.components[2][i] << '\n';
    }
}

FlowField read_flow_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# grid", 0) != 0)
        throw ValidationError("flow CSV must start with a '# grid' metadata line");
    int dim = 0, points = 0;
    double half_width = 0.0;
    std::string boundary;
    std::istringstream meta(line.substr(6));
    std::string token;
    while (meta >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) throw ValidationError("malformed grid metadata token: " + token);
        const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        try {
            if (key == "dim") dim = std::stoi(value);
            else if (key == "half_width") half_width = std::stod(value);
            else if (key == "points") points = std::stoi(value);
            else if (key == "boundary") boundary = value;
        } catch (const std::exception&) {
            throw ValidationError("malformed grid metadata value: " + token);
        }
    }
    if (dim != 3 || boundary != "periodic") throw ValidationError("flow CSV must describe a periodic 3-D grid");
    if (points < 2 || !(half_width > 0.0)) throw ValidationError("flow CSV grid metadata is incomplete");
    const Grid g = Grid::make(3, half_width, points, Boundary::periodic);
    if (!std::getline(in, line) || line != "x,y,z,u1,u2,u3") throw ValidationError("flow CSV column header mismatch");
    VectorField u(g);
    const double tol = 1e-9 * g.spacing();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!std::getline(in, line)) throw ValidationError("flow CSV ends after " + std::to_string(i) + " rows");
        std::array<double, 6> row{};
        std::istringstream cells(line);
        std::string cell;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!std::getline(cells, cell, ',')) throw ValidationError("flow CSV row " + std::to_string(i) + " is short");
            try {
                row[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ValidationError("flow CSV row " + std::to_string(i) + " has a non-numeric cell");
            }
        }
        const Point x = g.position(i);
        for (std::size_t d = 0; d < 3; ++d) {
            if (std::abs(row[d] - x[d]) > tol)
                throw ValidationError("flow CSV row " + std::to_string(i) + " is not at the expected node");
            u.components[d][i] = row[d + 3];
        }
    }
    return make_flow(std::move(u));
}

void write_q_csv(std::ostream& out, const QField& q) {
    const Grid& g = q.q_form_A.grid;
    out << "# grid dim=" << g.dim() << " half_width=" << std::setprecision(17) << g.half_width()
        << " points=" << g.points() << " boundary=periodic\n";
    out << "x,y,z,q_form_A,q_form_B,mask\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Point x = g.position(i);
        out << x[0] << ',' << x[1] << ',' << x[2] << ',' << q.q_form_A.values[i] << ',' << q.q_form_B.values[i]
            << ',' << static_cast<int>(q.mask[i]) << '\n';
    }
}

} // namespace shlab
