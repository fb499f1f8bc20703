#include "gradix/rte.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>

#include "gradix/error.hpp"

namespace gradix {

namespace {

std::atomic<bool> g_erf_fault{false};

constexpr double kFourPi = 4.0 * std::numbers::pi;

double refractive(const CaseSpec& spec, const Point& p) {
    return spec.refractive_index ? spec.refractive_index(p) : 1.0;
}

std::array<double, 2> refractive_grad(const CaseSpec& spec, const Point& p) {
    return spec.refractive_gradient ? spec.refractive_gradient(p) : std::array<double, 2>{0.0, 0.0};
}

double checked_inv_sin(double theta) {
    const double s = std::sin(theta);
    if (std::abs(s) < kSinThetaFloor) {
        throw SingularityError("angular term evaluated at theta = " + std::to_string(theta) + " (sin below 1e-6)");
    }
    return 1.0 / s;
}

// (Omega cos(theta) - k) . grad n and its theta derivative.
double g_theta(double th, double ph, const std::array<double, 2>& gn) {
    return std::cos(th) * std::sin(th) * (std::cos(ph) * gn[0] + std::sin(ph) * gn[1]);
}
double dg_theta(double th, double ph, const std::array<double, 2>& gn) {
    return std::cos(2.0 * th) * (std::cos(ph) * gn[0] + std::sin(ph) * gn[1]);
}
// s1 . grad n with s1 = (-sin(phi), cos(phi), 0), and its phi derivative.
double g_phi(double ph, const std::array<double, 2>& gn) { return -std::sin(ph) * gn[0] + std::cos(ph) * gn[1]; }
double dg_phi(double ph, const std::array<double, 2>& gn) { return -std::cos(ph) * gn[0] - std::sin(ph) * gn[1]; }

// Direction angles used by the phase function for fixed-direction cases.
std::pair<double, double> direction_angles(const CaseSpec& spec, const Point& p) {
    if (spec.has_angles()) return {p.theta, p.phi};
    const auto d = *spec.direction;
    return {std::numbers::pi / 2, std::atan2(d[1], d[0])};
}

std::size_t index_of(const CaseSpec& spec, Coord c) {
    for (std::size_t i = 0; i < spec.coords.size(); ++i) {
        if (spec.coords[i] == c) return i;
    }
    throw UsageError("case '" + spec.name + "' has no coordinate " + coord_name(c));
}

std::vector<double> axis(const CaseSpec& spec, Coord c, double scale = 1.0) {
    std::vector<double> d(spec.input_dim(), 0.0);
    d[index_of(spec, c)] = scale;
    return d;
}

std::vector<double> transport_direction(const CaseSpec& spec, const Point& p) {
    const auto om = spec.omega(p);
    std::vector<double> d(spec.input_dim(), 0.0);
    d[index_of(spec, Coord::x)] = om[0];
    if (spec.spatial_dim == 2) d[index_of(spec, Coord::y)] = om[1];
    return d;
}

Point with_direction(Point p, double theta, double phi) {
    p.theta = theta;
    p.phi = phi;
    return p;
}

void require_inflow(const CaseSpec& spec, const Point& p) {
    if (!on_inflow_boundary(spec, p, 1e-9)) {
        throw UsageError("boundary residual: point is not on the inflow boundary of '" + spec.name + "'");
    }
}

void require_data_point(const CaseSpec& spec, const Point& p) {
    if (!spec.data_region) throw UsageError("data residual: case '" + spec.name + "' has no data subdomain");
    const auto& r = *spec.data_region;
    constexpr double tol = 1e-12;
    bool inside = p.x >= r.x.lo - tol && p.x <= r.x.hi + tol;
    if (spec.spatial_dim == 2) inside = inside && p.y >= r.y.lo - tol && p.y <= r.y.hi + tol;
    if (!inside) throw UsageError("data residual: point outside the data subdomain");
}

void require_initial_time(const CaseSpec& spec, const Point& p) {
    if (!spec.has_time()) throw UsageError("temporal residual: case '" + spec.name + "' is steady");
    if (std::abs(p.t - spec.bound(Coord::t).lo) > 1e-12) {
        throw UsageError("temporal residual: point is not at the initial time");
    }
}

}  // namespace

double erf(double x) {
    const double v = std::erf(x);
    return g_erf_fault.load(std::memory_order_relaxed) ? -v : v;
}

void set_erf_fault(bool on) noexcept { g_erf_fault.store(on, std::memory_order_relaxed); }

std::vector<double> physical_input(const CaseSpec& spec, const Point& p) {
    std::vector<double> in(spec.input_dim());
    for (std::size_t i = 0; i < in.size(); ++i) in[i] = coord_of(p, spec.coords[i]);
    return in;
}

double network_at(const MlpParams& net, const CaseSpec& spec, const Point& p) {
    const auto in = spec.network_input(p);
    return forward(net, in);
}

ScalarField network_field(const MlpParams& net, const CaseSpec& spec) {
    return [net, spec](const Point& p) { return network_at(net, spec, p); };
}

QuadratureRule case_scatter_rule(const CaseSpec& spec) {
    return sphere_rule(spec.scatter_polar, spec.scatter_azimuth);
}

double sigma_g(const CaseSpec& spec, const QuadratureRule& rule) {
    if (!spec.phase) return 0.0;
    double sup = 0.0;
    for (const auto& out : rule.nodes) {
        double acc = 0.0;
        for (std::size_t i = 0; i < rule.size(); ++i) {
            acc += rule.weights[i] * spec.phase(out[0], out[1], rule.nodes[i][0], rule.nodes[i][1]);
        }
        sup = std::max(sup, std::abs(acc));
    }
    return sup;
}

// ---- autodiff route ------------------------------------------------------

ad::Var scattering_integral(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p,
                            const QuadratureRule& rule) {
    if (spec.ks == 0.0) return tape.lift(0.0);
    const auto [th, ph] = direction_angles(spec, p);
    ad::Var acc;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double th2 = rule.nodes[i][0];
        const double ph2 = rule.nodes[i][1];
        const Point q = spec.has_angles() ? with_direction(p, th2, ph2) : p;
        std::vector<ad::Var> in;
        for (double v : physical_input(spec, q)) in.push_back(tape.lift(v));
        const ad::Var value = network_at<ad::Var, ad::Var>(net, spec, std::span<const ad::Var>(in));
        const ad::Var term = value * (rule.weights[i] * spec.phase(th, ph, th2, ph2));
        acc = acc.valid() ? acc + term : term;
    }
    return acc * (spec.ks / kFourPi);
}

ad::Var interior_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p) {
    const auto x = physical_input(spec, p);
    const ad::DualFunction f = [&](std::span<const ad::Dual> in) {
        return network_at<ad::Var, ad::Dual>(net, spec, in);
    };
    const auto transport = ad::input_derivative(tape, f, x, transport_direction(spec, p));
    ad::Var r = transport.primal * spec.ke + transport.tangent;
    const double n = refractive(spec, p);
    if (spec.has_time()) {
        r = r + ad::input_derivative(tape, f, x, axis(spec, Coord::t)).tangent * (n / spec.c0);
    }
    if (spec.has_angles()) {
        const double inv = checked_inv_sin(p.theta) / n;
        const auto gn = refractive_grad(spec, p);
        const std::size_t it = index_of(spec, Coord::theta);
        const std::size_t ip = index_of(spec, Coord::phi);
        const ad::DualFunction flux_theta = [&](std::span<const ad::Dual> in) {
            const ad::Dual& th = in[it];
            const ad::Dual& ph = in[ip];
            const ad::Dual g = ad::cos(th) * ad::sin(th) * (ad::cos(ph) * gn[0] + ad::sin(ph) * gn[1]);
            return f(in) * g;
        };
        const ad::DualFunction flux_phi = [&](std::span<const ad::Dual> in) {
            const ad::Dual& ph = in[ip];
            const ad::Dual g = ad::sin(ph) * (-gn[0]) + ad::cos(ph) * gn[1];
            return f(in) * g;
        };
        const ad::Var d_theta = ad::input_derivative(tape, flux_theta, x, axis(spec, Coord::theta)).tangent;
        const ad::Var d_phi = ad::input_derivative(tape, flux_phi, x, axis(spec, Coord::phi)).tangent;
        r = r + (d_theta + d_phi) * inv;
    }
    r = r - spec.source(p);
    if (spec.ks > 0.0) r = r - scattering_integral(tape, net, spec, p, case_scatter_rule(spec));
    return r;
}

ad::Var boundary_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p) {
    require_inflow(spec, p);
    std::vector<ad::Var> in;
    for (double v : physical_input(spec, p)) in.push_back(tape.lift(v));
    return network_at<ad::Var, ad::Var>(net, spec, std::span<const ad::Var>(in)) - spec.boundary(p);
}

ad::Var temporal_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p) {
    require_initial_time(spec, p);
    std::vector<ad::Var> in;
    for (double v : physical_input(spec, p)) in.push_back(tape.lift(v));
    return network_at<ad::Var, ad::Var>(net, spec, std::span<const ad::Var>(in)) - spec.initial(p);
}

ad::Var data_residual(ad::Tape& tape, const BasicMlp<ad::Var>& net, const CaseSpec& spec, const Point& p,
                      double g) {
    require_data_point(spec, p);
    std::vector<ad::Var> in;
    for (double v : physical_input(spec, p)) in.push_back(tape.lift(v));
    return network_at<ad::Var, ad::Var>(net, spec, std::span<const ad::Var>(in)) - g;
}

double interior_residual(const CaseSpec& spec, const MlpParams& net, const Point& p) {
    ad::Tape tape;
    const auto on = on_tape(tape, net);
    return interior_residual(tape, on, spec, p).value();
}

double boundary_residual(const CaseSpec& spec, const MlpParams& net, const Point& p) {
    require_inflow(spec, p);
    return network_at(net, spec, p) - spec.boundary(p);
}

double temporal_residual(const CaseSpec& spec, const MlpParams& net, const Point& p) {
    require_initial_time(spec, p);
    return network_at(net, spec, p) - spec.initial(p);
}

double data_residual(const CaseSpec& spec, const MlpParams& net, const Point& p, double g) {
    require_data_point(spec, p);
    return network_at(net, spec, p) - g;
}

// ---- callable route ------------------------------------------------------

double scattering_integral(const CaseSpec& spec, const ScalarField& field, const Point& p,
                           const QuadratureRule& rule) {
    if (spec.ks == 0.0) return 0.0;
    const auto [th, ph] = direction_angles(spec, p);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double th2 = rule.nodes[i][0];
        const double ph2 = rule.nodes[i][1];
        const Point q = spec.has_angles() ? with_direction(p, th2, ph2) : p;
        acc += rule.weights[i] * spec.phase(th, ph, th2, ph2) * field(q);
    }
    return spec.ks / kFourPi * acc;
}

double interior_residual(const CaseSpec& spec, const ScalarField& field, const Point& p, double h) {
    const auto om = spec.omega(p);
    Point fwd = p;
    Point bwd = p;
    fwd.x += h * om[0];
    bwd.x -= h * om[0];
    if (spec.spatial_dim == 2) {
        fwd.y += h * om[1];
        bwd.y -= h * om[1];
    }
    double r = spec.ke * field(p) + (field(fwd) - field(bwd)) / (2.0 * h);
    const double n = refractive(spec, p);
    if (spec.has_time()) {
        Point tf = p;
        Point tb = p;
        tf.t += h;
        tb.t -= h;
        r += n / spec.c0 * (field(tf) - field(tb)) / (2.0 * h);
    }
    if (spec.has_angles()) {
        const double inv = checked_inv_sin(p.theta) / n;
        const auto gn = refractive_grad(spec, p);
        auto flux_theta = [&](double th) { return field(with_direction(p, th, p.phi)) * g_theta(th, p.phi, gn); };
        auto flux_phi = [&](double ph) { return field(with_direction(p, p.theta, ph)) * g_phi(ph, gn); };
        const double d_theta = (flux_theta(p.theta + h) - flux_theta(p.theta - h)) / (2.0 * h);
        const double d_phi = (flux_phi(p.phi + h) - flux_phi(p.phi - h)) / (2.0 * h);
        r += (d_theta + d_phi) * inv;
    }
    r -= spec.source(p);
    if (spec.ks > 0.0) r -= scattering_integral(spec, field, p, case_scatter_rule(spec));
    return r;
}

double boundary_residual(const CaseSpec& spec, const ScalarField& field, const Point& p) {
    require_inflow(spec, p);
    return field(p) - spec.boundary(p);
}

double data_residual(const CaseSpec& spec, const ScalarField& field, const Point& p, double g) {
    require_data_point(spec, p);
    return field(p) - g;
}

// ---- stencil route -------------------------------------------------------

InteriorStencil interior_stencil(const CaseSpec& spec, const Point& p) {
    InteriorStencil st;
    st.value_coef = spec.ke;
    st.seed = transport_direction(spec, p);
    st.source = spec.source(p);
    const double n = refractive(spec, p);
    if (spec.has_time()) st.seed[index_of(spec, Coord::t)] = n / spec.c0;
    if (spec.has_angles()) {
        const double inv = checked_inv_sin(p.theta) / n;
        const auto gn = refractive_grad(spec, p);
        st.value_coef += (dg_theta(p.theta, p.phi, gn) + dg_phi(p.phi, gn)) * inv;
        st.seed[index_of(spec, Coord::theta)] = g_theta(p.theta, p.phi, gn) * inv;
        st.seed[index_of(spec, Coord::phi)] = g_phi(p.phi, gn) * inv;
    }
    if (spec.ks > 0.0) {
        const auto rule = case_scatter_rule(spec);
        const auto [th, ph] = direction_angles(spec, p);
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double th2 = rule.nodes[i][0];
            const double ph2 = rule.nodes[i][1];
            const double coef = -spec.ks / kFourPi * rule.weights[i] * spec.phase(th, ph, th2, ph2);
            if (spec.has_angles()) {
                st.couplings.emplace_back(with_direction(p, th2, ph2), coef);
            } else {
                st.value_coef += coef;
            }
        }
    }
    return st;
}

ScalarField derive_source_from_exact(const CaseSpec& spec) {
    if (!spec.exact || !spec.exact_gradient) {
        throw UsageError("derive_source_from_exact: case '" + spec.name + "' lacks a closed-form gradient");
    }
    if (!spec.direction || spec.ks != 0.0) {
        throw UsageError("derive_source_from_exact: needs a fixed direction and no scattering");
    }
    const auto dir = *spec.direction;
    const int dim = spec.spatial_dim;
    const double ke = spec.ke;
    return [dir, dim, ke, exact = spec.exact, grad = spec.exact_gradient](const Point& p) {
        const auto g = grad(p);
        double s = ke * exact(p) + dir[0] * g[0];
        if (dim == 2) s += dir[1] * g[1];
        return s;
    };
}

double oracle_integrate_characteristic(const CaseSpec& spec, const Point& p, int steps) {
    if (!spec.direction) throw UsageError("characteristic oracle: case '" + spec.name + "' has no fixed direction");
    if (steps < 1) throw UsageError("characteristic oracle: steps must be positive");
    const auto om = *spec.direction;
    const auto box = spec.spatial_box();
    // Ray parameter back to the first inflow wall.
    double tau = std::numeric_limits<double>::infinity();
    auto back = [&](double pos, double w, const Interval& iv) {
        if (w > 0) tau = std::min(tau, (pos - iv.lo) / w);
        if (w < 0) tau = std::min(tau, (iv.hi - pos) / -w);
    };
    back(p.x, om[0], box.x);
    if (spec.spatial_dim == 2) back(p.y, om[1], box.y);
    if (!std::isfinite(tau)) throw UsageError("characteristic oracle: zero direction");

    Point start = p;
    start.x -= tau * om[0];
    if (spec.spatial_dim == 2) start.y -= tau * om[1];
    auto along = [&](double s) {
        Point q = start;
        q.x += s * om[0];
        if (spec.spatial_dim == 2) q.y += s * om[1];
        return q;
    };
    auto rhs = [&](double s, double value) { return -spec.ke * value + spec.source(along(s)); };

    double value = spec.boundary(start);
    const double h = tau / steps;
    for (int k = 0; k < steps; ++k) {
        const double s = k * h;
        const double k1 = rhs(s, value);
        const double k2 = rhs(s + 0.5 * h, value + 0.5 * h * k1);
        const double k3 = rhs(s + 0.5 * h, value + 0.5 * h * k2);
        const double k4 = rhs(s + h, value + h * k3);
        value += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return value;
}

}  // namespace gradix
