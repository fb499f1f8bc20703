#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gradix/cases.hpp"
#include "gradix/error.hpp"
#include "gradix/network.hpp"
#include "gradix/rte.hpp"
#include "gradix/sampling.hpp"

using namespace gradix;

namespace {

constexpr double kPi = std::numbers::pi;

// Maclaurin series, 30 terms.
double erf_series(double x) {
    double term = x, sum = x;
    for (int n = 1; n < 30; ++n) {
        term *= -x * x / n;
        sum += term / (2 * n + 1);
    }
    return 2.0 / std::sqrt(kPi) * sum;
}

Point at(double x, double y = 0.0) {
    Point p;
    p.x = x;
    p.y = y;
    return p;
}

Point angular(double x, double y, double theta, double phi) {
    Point p = at(x, y);
    p.theta = theta;
    p.phi = phi;
    return p;
}

MlpParams zero_net(const CaseSpec& spec) { return zeros(Architecture::uniform(spec.input_dim(), 1, 3)); }

// Cosine of the angle between two directions.
double cos_between(double t1, double p1, double t2, double p2) {
    return std::sin(t1) * std::sin(t2) * std::cos(p1 - p2) + std::cos(t1) * std::cos(t2);
}

std::vector<CaseSpec> fixed_cases() {
    std::vector<CaseSpec> out;
    for (double ke : {0.1, 1.0, 10.0}) out.push_back(case_1d_gaussian(ke));
    for (double ke : {0.1, 1.0, 2.0, 10.0}) out.push_back(case_slab_discontinuous(ke));
    for (double ke : {1.0, 5.0, 10.0}) out.push_back(case_square_diagonal(ke));
    for (double ke : {0.1, 1.0}) out.push_back(case_2d_gaussian(ke));
    for (double ke : {0.1, 1.0, 2.0}) out.push_back(case_diag_gaussian(ke));
    return out;
}

}  // namespace

TEST_CASE("erf") {
    CHECK(gradix::erf(0.0) == 0.0);
    CHECK(gradix::erf(1.0) == doctest::Approx(0.8427007929).epsilon(1e-10));
    CHECK(std::abs(gradix::erf(1.0) - erf_series(1.0)) < 1.5e-7);
    for (double x : {0.1, 0.5, 1.3, 2.2, 3.7, 6.0}) {
        CHECK(gradix::erf(-x) == -gradix::erf(x));
        if (x < 2.5) CHECK(std::abs(gradix::erf(x) - erf_series(x)) < 1.5e-7);
    }
}

TEST_CASE("interior residual examples") {
    SUBCASE("zero network gives minus the source") {
        const auto spec = case_slab_discontinuous(1.0);
        for (double x : {1.0, 4.0, 6.5, 9.0}) {
            CHECK(interior_residual(spec, zero_net(spec), at(x)) == doctest::Approx(-spec.source(at(x))));
        }
    }
    SUBCASE("exact 1D Gaussian solution as the network") {
        const auto spec = case_1d_gaussian(1.0);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(0.01, 0.99);
        for (int i = 0; i < 10; ++i) CHECK(std::abs(interior_residual(spec, spec.exact, at(u(rng)))) < 1e-6);
    }
    SUBCASE("manufactured graded case") {
        for (auto profile : {IndexProfile::linear, IndexProfile::radial}) {
            const auto spec = manufactured_graded_case(profile);
            std::mt19937_64 rng(4);
            std::uniform_real_distribution<double> u(0.05, 0.95), th(0.3, kPi - 0.3), ph(0.0, 2 * kPi);
            for (int i = 0; i < 10; ++i) {
                const Point p = angular(u(rng), u(rng), th(rng), ph(rng));
                CHECK(std::abs(interior_residual(spec, spec.exact, p)) < 1e-6);
            }
        }
    }
    SUBCASE("poles are rejected") {
        const auto spec = manufactured_graded_case(IndexProfile::linear);
        CHECK_THROWS_AS(interior_residual(spec, zero_net(spec), angular(0.5, 0.5, 0.0, 0.0)), SingularityError);
    }
}

TEST_CASE("network routes agree: tape, stencil view and finite differences") {
    for (auto profile : {IndexProfile::linear, IndexProfile::radial}) {
        const auto spec = manufactured_graded_case(profile);
        const auto net = init(Architecture::uniform(4, 2, 6), 11);
        const auto field = network_field(net, spec);
        for (const auto& p : {angular(0.3, 0.6, 1.0, 0.5), angular(0.8, 0.2, 2.0, 4.0)}) {
            const double tape = interior_residual(spec, net, p);
            const double fd = interior_residual(spec, field, p, 1e-6);
            CHECK(std::abs(tape - fd) < 1e-6 * std::max(1.0, std::abs(tape)));
        }
    }
}

TEST_CASE("scattering integral and sigma_g") {
    auto spec = manufactured_graded_case(IndexProfile::uniform);
    const auto rule = sphere_rule(4, 8);
    const Point p = angular(0.5, 0.5, 1.1, 0.7);
    const ScalarField constant = [](const Point&) { return 2.5; };
    const ScalarField one = [](const Point&) { return 1.0; };

    auto zero_ks = spec;
    zero_ks.ks = 0.0;
    CHECK(scattering_integral(zero_ks, constant, p, rule) == 0.0);

    spec.ks = 0.4;
    spec.phase = [](double, double, double, double) { return 1.0; };
    CHECK(scattering_integral(spec, constant, p, rule) == doctest::Approx(0.4 * 2.5).epsilon(1e-12));
    CHECK(sigma_g(spec, rule) == doctest::Approx(4 * kPi).epsilon(1e-12));

    spec.phase = [](double t1, double p1, double t2, double p2) { return 1.0 + cos_between(t1, p1, t2, p2); };
    CHECK(std::abs(scattering_integral(spec, one, p, rule) - 0.4) < 1e-9);
    CHECK(std::abs(sigma_g(spec, rule) - 4 * kPi) < 1e-9);

    spec.phase = [](double, double, double, double) { return 0.0; };
    CHECK(sigma_g(spec, rule) == 0.0);

    // Isotropic phase with a constant field for rules of order >= 2.
    spec.phase = [](double, double, double, double) { return 1.0; };
    for (std::size_t n : {2u, 3u, 6u}) {
        CHECK(std::abs(scattering_integral(spec, constant, p, sphere_rule(n, 2 * n)) - 0.4 * 2.5) < 1e-10);
    }
}

TEST_CASE("boundary, temporal and data residual examples") {
    const auto slab = case_slab_discontinuous(1.0);
    CHECK(boundary_residual(slab, zero_net(slab), at(0.0)) == -1.0);
    const ScalarField unit = [](const Point&) { return 1.0; };
    CHECK(boundary_residual(slab, unit, at(0.0)) == 0.0);
    CHECK_THROWS_AS(boundary_residual(slab, zero_net(slab), at(3.0)), UsageError);
    CHECK_THROWS_AS(boundary_residual(slab, zero_net(slab), at(10.0)), UsageError);

    const auto g = case_1d_gaussian(1.0, 0.02, 0.5);
    CHECK(boundary_residual(g, zero_net(g), at(0.0)) == doctest::Approx(-std::exp(-0.25 / 0.0004)));

    const auto inverse = make_inverse(case_2d_gaussian(1.0), Box{{0.25, 0.75}, {0.25, 0.75}});
    const Point q = at(0.4, 0.6);
    const auto net = init(Architecture::uniform(2, 1, 4), 2);
    CHECK(data_residual(inverse, net, q, network_at(net, inverse, q)) == 0.0);
    CHECK(data_residual(inverse, zero_net(inverse), q, 1.0) == -1.0);
    CHECK(std::abs(data_residual(inverse, inverse.exact, q, inverse.exact(q))) < 1e-12);
    CHECK_THROWS_AS(data_residual(case_2d_gaussian(1.0), zero_net(inverse), q, 1.0), UsageError);
    CHECK_THROWS_AS(data_residual(inverse, zero_net(inverse), at(0.1, 0.5), 1.0), UsageError);
    CHECK_THROWS_AS(temporal_residual(slab, zero_net(slab), at(1.0)), UsageError);
}

TEST_CASE("1D Gaussian case") {
    const auto spec = case_1d_gaussian(1.0);
    CHECK(spec.params.at("alpha") == 0.02);
    CHECK(spec.params.at("c") == 0.5);
    CHECK(spec.params.at("mu") == 0.5);
    CHECK(spec.exact(at(0.0)) == spec.boundary(at(0.0)));
    CHECK(spec.source(at(0.5)) == 1.0);
    const auto k10 = case_1d_gaussian(10.0);
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
        const Point p = at((i - 0.5) / 20.0);
        worst = std::max(worst, std::abs(k10.exact(p) - oracle_integrate_characteristic(k10, p, 4000)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("slab with discontinuous source") {
    const auto spec = case_slab_discontinuous(1.0);
    CHECK(spec.exact(at(0.0)) == 1.0);
    CHECK(spec.exact(at(5.0)) == 1.0);
    CHECK(spec.exact(at(5.0 + 1e-12)) == doctest::Approx(1.0));
    CHECK(spec.exact(at(7.0)) == doctest::Approx(0.1353352832).epsilon(1e-10));
    CHECK(spec.source(at(2.0)) == 1.0);
    CHECK(std::abs(spec.source(at(8.0))) < 1e-15);
    const auto s = derive_source_from_exact(spec);
    for (double x : {0.5, 3.0, 6.0, 9.5}) CHECK(s(at(x)) == doctest::Approx(spec.source(at(x))).epsilon(1e-12));
    const auto half = case_slab_discontinuous(2.0, 10.0, 0.5);
    const double u = 7.0 - 5.0;
    CHECK(half.source(at(7.0)) == doctest::Approx((0.5 * -2.0 + 2.0) * std::exp(-2.0 * u)).epsilon(1e-12));
}

TEST_CASE("square enclosure along the diagonal") {
    const auto spec = case_square_diagonal(5.0);
    CHECK(spec.exact(at(0.0, 0.0)) == 1.0);
    CHECK(spec.exact(at(1.0, 1.0)) == doctest::Approx(std::exp(-5.0 / std::sqrt(2.0))).epsilon(1e-12));
    CHECK(spec.exact(at(1.0, 1.0)) == doctest::Approx(0.0291431932).epsilon(1e-9));
    for (const auto& p : {at(0.1, 0.2), at(0.5, 0.49), at(0.9, 0.05)}) CHECK(spec.exact(p) == 1.0);
}

TEST_CASE("2D Gaussian case") {
    const auto spec = case_2d_gaussian(1.0);
    CHECK(spec.params.at("c") == doctest::Approx(std::sqrt(2.0) / 2));
    const auto pts = sobol(2, 20);
    double worst = 0.0;
    for (const auto& u : pts) {
        const Point p = at(u[0], u[1]);
        worst = std::max(worst, std::abs(spec.exact(p) - oracle_integrate_characteristic(spec, p, 4000)));
        CHECK(spec.exact(p) == doctest::Approx(spec.exact(at(u[1], u[0]))).epsilon(1e-13));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("diagonal Gaussian case") {
    for (double ke : {0.1, 1.0, 2.0}) {
        const auto diag = case_diag_gaussian(ke);
        const auto full = case_2d_gaussian(ke);
        CHECK(diag.exact(at(0.0)) == 0.0);
        for (double t : {0.1, 0.35, 0.5, 0.8, 1.0}) {
            CHECK(diag.exact(at(std::sqrt(2.0) * t)) == doctest::Approx(full.exact(at(t, t))).epsilon(1e-12));
        }
    }
}

TEST_CASE("make_inverse") {
    const auto base = case_2d_gaussian(0.1);
    const auto inv = make_inverse(base, Box{{0.0, 1.0}, {0.0, 1.0}});
    CHECK(inv.inverse);
    CHECK(!inv.use_boundary);
    CHECK_THROWS_AS(make_inverse(base, Box{{0.5, 1.2}, {0.0, 1.0}}), UsageError);
    const auto set = build_training_set(inv, {4, 0, 0, 12});
    for (std::size_t i = 0; i < set.data.size(); ++i) CHECK(set.data_values[i] == inv.exact(set.data.points[i]));
}

TEST_CASE("manufactured graded case") {
    const Point p = angular(0.4, 0.7, 1.2, 2.5);
    const auto uniform = manufactured_graded_case(IndexProfile::uniform);
    const auto st = interior_stencil(uniform, p);
    CHECK(st.seed[2] == 0.0);
    CHECK(st.seed[3] == 0.0);

    const auto s0 = manufactured_graded_case(IndexProfile::linear, manufactured_intensity, 0.0).source(p);
    const auto s1 = manufactured_graded_case(IndexProfile::linear, manufactured_intensity, 1.0).source(p);
    const auto s2 = manufactured_graded_case(IndexProfile::linear, manufactured_intensity, 2.0).source(p);
    CHECK(std::abs((s2 - s0) - 2.0 * (s1 - s0)) < 1e-6);
    CHECK(std::abs(s1 - s0) > 1e-3);
}

TEST_CASE("characteristic oracle") {
    auto spec = case_1d_gaussian(1.0, 0.02, 0.5, 1.0);
    spec.source = [](const Point&) { return 0.0; };
    spec.boundary = [](const Point&) { return 1.0; };
    CHECK(std::abs(oracle_integrate_characteristic(spec, at(1.0), 1000) - std::exp(-1.0)) < 1e-8);

    const auto g = case_1d_gaussian(0.1);
    double worst = 0.0;
    for (int i = 1; i <= 20; ++i) {
        const Point p = at(i / 20.0);
        worst = std::max(worst, std::abs(g.exact(p) - oracle_integrate_characteristic(g, p, 4000)));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("property: exact solutions annihilate the interior residual") {
    for (const auto& spec : fixed_cases()) {
        const auto set = build_training_set(spec, {100, 0, 0, 0});
        double worst = 0.0;
        for (const auto& p : set.interior.points) {
            if (spec.on_discontinuity && spec.on_discontinuity(p)) continue;
            worst = std::max(worst, std::abs(interior_residual(spec, spec.exact, p)));
        }
        INFO(spec.name, " ke=", spec.ke);
        CHECK(worst < 1e-5);
    }
    for (auto profile : {IndexProfile::linear, IndexProfile::radial}) {
        const auto spec = manufactured_graded_case(profile);
        const auto set = build_training_set(spec, {100, 0, 0, 0});
        for (const auto& p : set.interior.points) CHECK(std::abs(interior_residual(spec, spec.exact, p)) < 1e-5);
    }
}

TEST_CASE("property: exact solutions match boundary data on inflow walls") {
    for (const auto& spec : fixed_cases()) {
        const auto set = build_training_set(spec, {1, 64, 0, 0});
        for (const auto& p : set.spatial_boundary.points) CHECK(boundary_residual(spec, spec.exact, p) == 0.0);
    }
}

TEST_CASE("case catalog") {
    CHECK(case_names().size() == 8);
    for (const auto& name : case_names()) {
        const auto spec = make_case(name);
        CHECK(spec.name == name);
        CHECK_NOTHROW(spec.validate());
        CHECK(spec.ke == doctest::Approx(spec.ka + spec.ks));
    }
    CHECK_THROWS_AS(make_case("no-such-case"), UsageError);
    CaseOptions o;
    o.ke = 2.0;
    CHECK(make_case("slab-discontinuous", o).ke == 2.0);
}
