#include "gradix/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "gradix/autodiff.hpp"
#include "gradix/cases.hpp"
#include "gradix/network.hpp"
#include "gradix/rte.hpp"
#include "gradix/sampling.hpp"
#include "gradix/training.hpp"

namespace gradix {

namespace {

double rel_err(double a, double b, double floor) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor}); }

CheckResult finish(std::string name, double measured, double tol, std::string detail = {}) {
    return {std::move(name), measured < tol, measured, tol, std::move(detail)};
}

std::string ke_label(double ke) {
    std::ostringstream os;
    os << ke;
    return os.str();
}

MlpParams random_net(std::size_t width, std::uint64_t seed) {
    auto net = init(Architecture::uniform(2, 2, width), seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (auto& layer : net.layers) {
        for (auto& b : layer.bias) b = u(rng);
    }
    return net;
}

double eval_net(const MlpParams& net, const std::array<double, 2>& z) {
    return forward(net, std::span<const double>(z));
}

std::vector<double> param_gradient(const MlpParams& net, const std::array<double, 2>& z) {
    ad::Tape tape;
    const auto vnet = on_tape(tape, net);
    std::array<ad::Var, 2> in{tape.lift(z[0]), tape.lift(z[1])};
    const ad::Var out = forward<ad::Var, ad::Var>(vnet, std::span<const ad::Var>(in));
    const auto leaves = flatten(vnet);
    return ad::reverse_gradient(out, leaves);
}

// d/dparams of the input derivative along `dir`.
std::pair<double, std::vector<double>> mixed_gradient(const MlpParams& net, const std::array<double, 2>& z,
                                                      const std::array<double, 2>& dir) {
    ad::Tape tape;
    const auto vnet = on_tape(tape, net);
    const ad::DualFunction f = [&](std::span<const ad::Dual> in) { return forward<ad::Var, ad::Dual>(vnet, in); };
    const ad::Dual out = ad::input_derivative(tape, f, z, dir);
    const auto leaves = flatten(vnet);
    return {out.derivative(), ad::reverse_gradient(out.tangent, leaves)};
}

std::array<double, 2> random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng)};
}

CheckResult check_reverse_gradient() {
    std::mt19937_64 rng(11);
    double worst = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_net(2 + static_cast<std::size_t>(trial % 7), 100 + static_cast<std::uint64_t>(trial));
        const auto z = random_point(rng);
        const auto g = param_gradient(net, z);
        auto flat = flatten(net);
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double keep = flat[i];
            flat[i] = keep + h;
            const double fp = eval_net(unflatten(net.arch, flat), z);
            flat[i] = keep - h;
            const double fm = eval_net(unflatten(net.arch, flat), z);
            flat[i] = keep;
            worst = std::max(worst, rel_err(g[i], (fp - fm) / (2 * h), 1e-2));
        }
    }
    return finish("autodiff-reverse-vs-fd", worst, 1e-6, "100 random 2-layer networks, h=1e-5");
}

CheckResult check_input_derivative() {
    std::mt19937_64 rng(12);
    double worst = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_net(8, 300 + static_cast<std::uint64_t>(trial));
        const auto z = random_point(rng);
        const auto d = random_point(rng);
        const double tangent = mixed_gradient(net, z, d).first;
        const double fd = (eval_net(net, {z[0] + h * d[0], z[1] + h * d[1]}) -
                           eval_net(net, {z[0] - h * d[0], z[1] - h * d[1]})) /
                          (2 * h);
        worst = std::max(worst, rel_err(tangent, fd, 1e-2));
    }
    return finish("autodiff-input-derivative-vs-fd", worst, 1e-6, "100 random points, h=1e-5");
}

CheckResult check_mixed() {
    std::mt19937_64 rng(13);
    double worst = 0.0;
    const double h = 1e-5;
    for (int trial = 0; trial < 40; ++trial) {
        const auto net = random_net(2 + static_cast<std::size_t>(trial % 7), 500 + static_cast<std::uint64_t>(trial));
        const auto z = random_point(rng);
        const auto d = random_point(rng);
        const auto mixed = mixed_gradient(net, z, d).second;
        const auto gp = param_gradient(net, {z[0] + h * d[0], z[1] + h * d[1]});
        const auto gm = param_gradient(net, {z[0] - h * d[0], z[1] - h * d[1]});
        for (std::size_t i = 0; i < mixed.size(); ++i) {
            worst = std::max(worst, rel_err(mixed[i], (gp[i] - gm[i]) / (2 * h), 1e-2));
        }
    }
    return finish("autodiff-mixed-vs-fd-of-gradient", worst, 1e-4, "40 random networks, h=1e-5");
}

CheckResult check_gauss_legendre() {
    double worst = 0.0;
    for (std::size_t n = 1; n <= 20; ++n) {
        const auto rule = gauss_legendre(n, -1.0, 2.0);
        for (std::size_t k = 0; k <= 2 * n - 1; ++k) {
            double q = 0.0;
            for (std::size_t i = 0; i < rule.size(); ++i) q += rule.weights[i] * std::pow(rule.nodes[i][0], k);
            const double exact = (std::pow(2.0, k + 1) - std::pow(-1.0, k + 1)) / static_cast<double>(k + 1);
            worst = std::max(worst, std::abs(q - exact) / std::max(1.0, std::abs(exact)));
        }
    }
    return finish("gauss-legendre-exactness", worst, 1e-12, "n=1..20, monomials up to degree 2n-1 on [-1,2]");
}

CheckResult check_sobol() {
    static const double reference[8][5] = {
        {0.5, 0.5, 0.5, 0.5, 0.5},           {0.75, 0.25, 0.25, 0.25, 0.75},
        {0.25, 0.75, 0.75, 0.75, 0.25},      {0.375, 0.375, 0.625, 0.875, 0.375},
        {0.875, 0.875, 0.125, 0.375, 0.875}, {0.625, 0.125, 0.875, 0.625, 0.625},
        {0.125, 0.625, 0.375, 0.125, 0.125}, {0.1875, 0.3125, 0.9375, 0.4375, 0.5625},
    };
    const auto pts = sobol(5, 8);
    double worst = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 5; ++j) worst = std::max(worst, std::abs(pts[i][j] - reference[i][j]));
    }
    return finish("sobol-reference-points", worst, 1e-15, "first 8 points in 5 dimensions");
}

double erf_series(double x) {
    long double term = x;
    long double sum = x;
    for (int n = 1; n < 200; ++n) {
        term *= -static_cast<long double>(x) * x / n;
        const long double add = term / (2 * n + 1);
        sum += add;
        if (std::abs(add) < 1e-30L) break;
    }
    return static_cast<double>(sum * 2.0L / std::sqrt(std::numbers::pi_v<long double>));
}

CheckResult check_erf() {
    double worst = 0.0;
    for (int i = -30; i <= 30; ++i) {
        const double x = 0.1 * i + 0.013;
        worst = std::max(worst, std::abs(gradix::erf(x) - erf_series(x)));
    }
    return finish("erf-vs-maclaurin", worst, 1e-12, "x in [-3, 3]");
}

std::vector<CaseSpec> fixed_direction_cases() {
    std::vector<CaseSpec> out;
    for (double ke : {0.1, 1.0, 10.0}) out.push_back(case_1d_gaussian(ke));
    for (double ke : {0.1, 1.0, 2.0, 10.0}) out.push_back(case_slab_discontinuous(ke));
    for (double ke : {1.0, 5.0, 10.0}) out.push_back(case_square_diagonal(ke));
    for (double ke : {0.1, 1.0}) out.push_back(case_2d_gaussian(ke));
    for (double ke : {0.1, 1.0, 2.0}) out.push_back(case_diag_gaussian(ke));
    return out;
}

CheckResult check_exact_residuals() {
    double worst = 0.0;
    std::string where;
    for (const auto& spec : fixed_direction_cases()) {
        const auto set = build_training_set(spec, {64, 0, 0, 0});
        for (const auto& p : set.interior.points) {
            if (spec.on_discontinuity && spec.on_discontinuity(p)) continue;
            const double r = std::abs(interior_residual(spec, spec.exact, p));
            if (r > worst) {
                worst = r;
                where = spec.name + " ke=" + ke_label(spec.ke);
            }
        }
    }
    return finish("interior-residual-at-exact", worst, 1e-5, "worst: " + where);
}

CheckResult check_oracle() {
    double worst = 0.0;
    std::string where;
    std::vector<CaseSpec> cases;
    for (double ke : {0.1, 1.0, 10.0}) cases.push_back(case_1d_gaussian(ke));
    for (double ke : {0.1, 1.0}) cases.push_back(case_2d_gaussian(ke));
    for (const auto& spec : cases) {
        const auto set = build_training_set(spec, {20, 0, 0, 0});
        for (const auto& p : set.interior.points) {
            const double d = std::abs(spec.exact(p) - oracle_integrate_characteristic(spec, p, 4000));
            if (d > worst) {
                worst = d;
                where = spec.name + " ke=" + ke_label(spec.ke);
            }
        }
    }
    return finish("characteristic-oracle-vs-closed-form", worst, 1e-5, "worst: " + where);
}

CheckResult check_manufactured() {
    double worst = 0.0;
    std::string where;
    for (auto profile : {IndexProfile::linear, IndexProfile::radial}) {
        const auto spec = manufactured_graded_case(profile);
        const auto set = build_training_set(spec, {64, 0, 0, 0});
        for (const auto& p : set.interior.points) {
            const double r = std::abs(interior_residual(spec, spec.exact, p));
            if (r > worst) {
                worst = r;
                where = spec.name;
            }
        }
    }
    return finish("manufactured-graded-residual", worst, 1e-5, "worst: " + where);
}

CheckResult check_training_identity() {
    const auto spec = case_1d_gaussian(1.0);
    const auto sets = build_training_set(spec, {64, 2, 0, 0});
    const auto net = init(Architecture::uniform(1, 2, 8), 3);
    const FamilyErrors e = training_errors(net, sets, spec);
    auto loss_at = [&](double lambda) {
        ad::Tape tape;
        LossConfig cfg;
        cfg.lambda = lambda;
        return loss_forward(tape, on_tape(tape, net), sets, spec, cfg).value();
    };
    const double l1 = loss_at(1.0);
    const double l2 = loss_at(2.0);
    const double d_int = std::abs(e[0] * e[0] - (l2 - l1)) / std::max(1.0, l1);
    const double d_total = std::abs(e[0] * e[0] + e[1] * e[1] - l1) / std::max(1.0, l1);
    return finish("training-error-loss-identity", std::max(d_int, d_total), 1e-12,
                  "E_int^2 and E_int^2 + E_sb^2 against lambda-weighted losses");
}

}  // namespace

std::vector<CheckResult> run_verify_suite() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<std::function<CheckResult()>> checks{
        check_erf,          check_reverse_gradient,  check_input_derivative, check_mixed,
        check_gauss_legendre, check_sobol,           check_exact_residuals,  check_oracle,
        check_manufactured, check_training_identity,
    };
    std::vector<CheckResult> out;
    for (const auto& c : checks) {
        try {
            out.push_back(c());
        } catch (const std::exception& e) {
            out.push_back({"exception", false, 0.0, 0.0, e.what()});
        }
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(finish("verify-runtime-seconds", seconds, 60.0));
    return out;
}

bool print_checks(std::ostream& out, const std::vector<CheckResult>& checks) {
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.passed;
        std::ostringstream line;
        line << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(40) << c.name << std::right
             << std::scientific << std::setprecision(3) << c.measured << " < " << c.tolerance;
        if (!c.detail.empty()) line << "  (" << c.detail << ")";
        out << line.str() << '\n';
    }
    return ok;
}

}  // namespace gradix
