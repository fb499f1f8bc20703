#include "gradix/cases.hpp"

#include <cmath>

#include "gradix/error.hpp"
#include "gradix/rte.hpp"

namespace gradix {

namespace {

constexpr double kSqrtPi = 1.7724538509055160273;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError(std::string(what) + " must be positive");
}

// (1/mu) int_{s_in}^{s} exp(-kappa (s - s')) exp(-(s' - c)^2 / alpha^2) ds' with
// kappa = ke / mu, written through erf.
double gaussian_transport(double s, double s_in, double ke, double alpha, double c, double mu) {
    const double kappa = ke / mu;
    const double shift = kappa * alpha / 2.0;
    const double bracket = erf((s - c) / alpha - shift) - erf((s_in - c) / alpha - shift);
    return alpha * kSqrtPi / (2.0 * mu) * std::exp(-kappa * (s - c) + shift * shift) * bracket;
}

CaseSpec fixed_direction_base(std::string name, double ke, int dim, std::array<double, 2> dir) {
    CaseSpec spec;
    spec.name = std::move(name);
    spec.spatial_dim = dim;
    spec.steady = true;
    spec.coords = dim == 1 ? std::vector<Coord>{Coord::x} : std::vector<Coord>{Coord::x, Coord::y};
    spec.direction = dir;
    spec.ke = ke;
    spec.ka = ke;
    spec.ks = 0.0;
    spec.params["ke"] = ke;
    spec.params["mu"] = dir[0];
    if (dim == 2) spec.params["eta"] = dir[1];
    return spec;
}

}  // namespace

CaseSpec case_1d_gaussian(double ke, double alpha, double c, double mu) {
    require_positive(ke, "k_e");
    require_positive(alpha, "alpha");
    if (!(mu > 0.0 && mu <= 1.0)) throw UsageError("1d-gaussian: mu must lie in (0, 1]");
    CaseSpec spec = fixed_direction_base("1d-gaussian", ke, 1, {mu, 0.0});
    spec.bounds = {{0.0, 1.0}};
    spec.params["alpha"] = alpha;
    spec.params["c"] = c;
    const double inflow = std::exp(-c * c / (alpha * alpha)) / ke;
    auto source = [alpha, c](const Point& p) {
        const double u = (p.x - c) / alpha;
        return std::exp(-u * u);
    };
    auto exact = [=](const Point& p) {
        return inflow * std::exp(-ke * p.x / mu) + gaussian_transport(p.x, 0.0, ke, alpha, c, mu);
    };
    spec.source = source;
    spec.boundary = [inflow](const Point&) { return inflow; };
    spec.exact = exact;
    spec.exact_gradient = [=](const Point& p) {
        return std::array<double, 2>{(source(p) - ke * exact(p)) / mu, 0.0};
    };
    return spec;
}

CaseSpec case_slab_discontinuous(double ke, double L, double mu) {
    require_positive(ke, "k_e");
    require_positive(L, "L");
    if (!(mu > 0.0 && mu <= 1.0)) throw UsageError("slab-discontinuous: mu must lie in (0, 1]");
    CaseSpec spec = fixed_direction_base("slab-discontinuous", ke, 1, {mu, 0.0});
    spec.bounds = {{0.0, L}};
    spec.params["L"] = L;
    const double mid = 0.5 * L;
    // Half-open split: the decaying piece owns x > L/2, the constant piece x <= L/2.
    spec.exact = [=](const Point& p) { return p.x > mid ? std::exp(-ke * (p.x - mid)) : 1.0; };
    spec.exact_gradient = [=](const Point& p) {
        return std::array<double, 2>{p.x > mid ? -ke * std::exp(-ke * (p.x - mid)) : 0.0, 0.0};
    };
    spec.boundary = [](const Point&) { return 1.0; };
    spec.on_discontinuity = [=](const Point& p) { return std::abs(p.x - mid) < 1e-6 * L; };
    spec.source = derive_source_from_exact(spec);
    return spec;
}

CaseSpec case_square_diagonal(double ke, double L) {
    require_positive(ke, "k_e");
    require_positive(L, "L");
    const double r = std::numbers::sqrt2 / 2;
    CaseSpec spec = fixed_direction_base("square-diagonal", ke, 2, {r, r});
    spec.bounds = {{0.0, L}, {0.0, L}};
    spec.params["L"] = L;
    spec.exact = [=](const Point& p) {
        const double u = p.x + p.y - L;
        return u > 0.0 ? std::exp(-ke * u / std::numbers::sqrt2) : 1.0;
    };
    spec.exact_gradient = [=](const Point& p) {
        const double u = p.x + p.y - L;
        const double g = u > 0.0 ? -ke / std::numbers::sqrt2 * std::exp(-ke * u / std::numbers::sqrt2) : 0.0;
        return std::array<double, 2>{g, g};
    };
    spec.boundary = [](const Point&) { return 1.0; };
    spec.on_discontinuity = [=](const Point& p) { return std::abs(p.x + p.y - L) < 1e-6 * L; };
    spec.source = derive_source_from_exact(spec);
    return spec;
}

CaseSpec case_2d_gaussian(double ke, double alpha, double c, double mu, double eta) {
    require_positive(ke, "k_e");
    require_positive(alpha, "alpha");
    require_positive(mu, "mu");
    require_positive(eta, "eta");
    CaseSpec spec = fixed_direction_base("2d-gaussian", ke, 2, {mu, eta});
    spec.bounds = {{0.0, 1.0}, {0.0, 1.0}};
    spec.params["alpha"] = alpha;
    spec.params["c"] = c;
    spec.source = [alpha, c](const Point& p) {
        const double u = ((p.x + p.y) / std::numbers::sqrt2 - c) / alpha;
        return std::exp(-u * u);
    };
    // Along the ray, u = (x + y)/sqrt(2) grows at rate beta; the ray entered
    // the square a ray length min(x/mu, y/eta) ago.
    const double beta = (mu + eta) / std::numbers::sqrt2;
    spec.exact = [=](const Point& p) {
        const double u = (p.x + p.y) / std::numbers::sqrt2;
        const double back = std::min(p.x / mu, p.y / eta);
        return gaussian_transport(u, u - beta * back, ke, alpha, c, beta);
    };
    spec.boundary = [](const Point&) { return 0.0; };
    return spec;
}

CaseSpec case_diag_gaussian(double ke, double alpha, double c) {
    require_positive(ke, "k_e");
    require_positive(alpha, "alpha");
    CaseSpec spec = fixed_direction_base("diag-gaussian", ke, 1, {1.0, 0.0});
    spec.bounds = {{0.0, std::numbers::sqrt2}};
    spec.params["alpha"] = alpha;
    spec.params["c"] = c;
    auto source = [alpha, c](const Point& p) {
        const double u = (p.x - c) / alpha;
        return std::exp(-u * u);
    };
    auto exact = [=](const Point& p) { return gaussian_transport(p.x, 0.0, ke, alpha, c, 1.0); };
    spec.source = source;
    spec.exact = exact;
    spec.exact_gradient = [=](const Point& p) {
        return std::array<double, 2>{source(p) - ke * exact(p), 0.0};
    };
    spec.boundary = [](const Point&) { return 0.0; };
    return spec;
}

CaseSpec make_inverse(const CaseSpec& base, const Box& region) {
    if (!base.has_exact()) throw UsageError("make_inverse: case '" + base.name + "' has no exact solution");
    CaseSpec spec = base;
    spec.name = base.name + "-inverse";
    spec.inverse = true;
    spec.use_boundary = false;
    spec.data_region = region;
    spec.params["data_x_lo"] = region.x.lo;
    spec.params["data_x_hi"] = region.x.hi;
    if (spec.spatial_dim == 2) {
        spec.params["data_y_lo"] = region.y.lo;
        spec.params["data_y_hi"] = region.y.hi;
    }
    spec.validate();
    return spec;
}

double manufactured_intensity(const Point& p) {
    const double st = std::sin(p.theta);
    const double ct = std::cos(p.theta);
    return std::exp(-0.5 * p.x - 0.3 * p.y) * (1.0 + 0.25 * st * std::cos(p.phi) + 0.2 * ct * ct);
}

CaseSpec manufactured_graded_case(IndexProfile profile, ScalarField solution, double gradient_scale) {
    if (!solution) throw UsageError("manufactured case needs a solution callable");
    CaseSpec spec;
    spec.spatial_dim = 2;
    spec.steady = true;
    spec.coords = {Coord::x, Coord::y, Coord::theta, Coord::phi};
    spec.bounds = {{0.0, 1.0}, {0.0, 1.0}, {0.2, std::numbers::pi - 0.2}, {0.0, 2.0 * std::numbers::pi}};
    spec.ke = 1.0;
    spec.ks = 0.3;
    spec.ka = 0.7;
    spec.phase = [](double th, double ph, double th2, double ph2) {
        const double cos_angle = std::sin(th) * std::sin(th2) * std::cos(ph - ph2) + std::cos(th) * std::cos(th2);
        return 1.0 + 0.5 * cos_angle;
    };
    switch (profile) {
        case IndexProfile::uniform:
            spec.name = "manufactured-graded-uniform";
            spec.refractive_index = [](const Point&) { return 1.0; };
            spec.refractive_gradient = [](const Point&) { return std::array<double, 2>{0.0, 0.0}; };
            break;
        case IndexProfile::linear:
            spec.name = "manufactured-graded-linear";
            spec.refractive_index = [](const Point& p) { return 1.0 + 0.2 * p.x; };
            spec.refractive_gradient = [gradient_scale](const Point&) {
                return std::array<double, 2>{0.2 * gradient_scale, 0.0};
            };
            break;
        case IndexProfile::radial:
            spec.name = "manufactured-graded-radial";
            spec.refractive_index = [](const Point& p) {
                const double dx = p.x - 0.5;
                const double dy = p.y - 0.5;
                return 1.2 - 0.4 * (dx * dx + dy * dy);
            };
            spec.refractive_gradient = [gradient_scale](const Point& p) {
                return std::array<double, 2>{-0.8 * (p.x - 0.5) * gradient_scale, -0.8 * (p.y - 0.5) * gradient_scale};
            };
            break;
    }
    spec.params["ke"] = spec.ke;
    spec.params["ks"] = spec.ks;
    spec.params["gradient_scale"] = gradient_scale;
    spec.boundary = solution;
    spec.exact = solution;

    // The source is the full operator applied to the solution: the residual
    // of a zero-source copy.
    CaseSpec unforced = spec;
    unforced.source = [](const Point&) { return 0.0; };
    spec.source = [unforced, solution](const Point& p) { return interior_residual(unforced, solution, p, 1e-6); };
    spec.validate();
    return spec;
}

const std::vector<std::string>& case_names() {
    static const std::vector<std::string> names{
        "1d-gaussian",         "slab-discontinuous",         "square-diagonal",
        "2d-gaussian",         "diag-gaussian",              "2d-gaussian-inverse",
        "manufactured-graded-linear", "manufactured-graded-radial",
    };
    return names;
}

CaseSpec make_case(const std::string& name, const CaseOptions& o) {
    const double r = std::numbers::sqrt2 / 2;
    if (name == "1d-gaussian") {
        return case_1d_gaussian(o.ke.value_or(1.0), o.alpha.value_or(0.02), o.c.value_or(0.5), o.mu.value_or(0.5));
    }
    if (name == "slab-discontinuous") {
        return case_slab_discontinuous(o.ke.value_or(1.0), o.L.value_or(10.0), o.mu.value_or(1.0));
    }
    if (name == "square-diagonal") return case_square_diagonal(o.ke.value_or(1.0), o.L.value_or(1.0));
    if (name == "2d-gaussian" || name == "2d-gaussian-inverse") {
        auto spec = case_2d_gaussian(o.ke.value_or(1.0), o.alpha.value_or(kGaussian2dAlpha), o.c.value_or(r),
                                     o.mu.value_or(r), o.eta.value_or(r));
        if (name == "2d-gaussian") return spec;
        return make_inverse(spec, o.data_region.value_or(kDefaultDataRegion));
    }
    if (name == "diag-gaussian") {
        return case_diag_gaussian(o.ke.value_or(1.0), o.alpha.value_or(kGaussian2dAlpha), o.c.value_or(r));
    }
    if (name == "manufactured-graded-linear") return manufactured_graded_case(IndexProfile::linear);
    if (name == "manufactured-graded-radial") return manufactured_graded_case(IndexProfile::radial);
    std::string known;
    for (const auto& n : case_names()) known += (known.empty() ? "" : ", ") + n;
    throw UsageError("unknown case '" + name + "' (known: " + known + ")");
}

}  // namespace gradix
