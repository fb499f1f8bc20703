#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "gradix/cases.hpp"
#include "gradix/error.hpp"
#include "gradix/metrics.hpp"
#include "gradix/rte.hpp"
#include "gradix/training.hpp"

#include "bound_reference.hpp"

using namespace gradix;

namespace {

constexpr std::size_t kInt = 0, kSb = 1, kTb = 2, kData = 3;

BoundInputs random_inputs(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::uniform_int_distribution<std::size_t> n(8, 100000);
    BoundInputs b;
    b.T = u(rng);
    b.nu = u(rng);
    b.c = u(rng);
    b.ks_inf = u(rng) - 0.1;
    b.sigma_g_inf = 4 * std::numbers::pi * u(rng) / 3;
    b.V2 = u(rng);
    b.N_int = n(rng);
    b.N_sb = n(rng);
    b.N_tb = n(rng);
    b.N_S = std::uniform_int_distribution<std::size_t>(1, 64)(rng);
    b.a = std::uniform_int_distribution<int>(1, 3)(rng);
    b.d = std::uniform_int_distribution<int>(1, 3)(rng);
    b.l = u(rng);
    b.C_eps = u(rng);
    b.hk_sb = u(rng);
    b.hk_int = u(rng);
    b.V_bar = u(rng);
    return b;
}

FamilyErrors random_errors(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1e-2);
    return {u(rng), u(rng), u(rng), u(rng)};
}

PointSet single(const Point& p, double w) {
    PointSet s;
    s.points.push_back(p);
    s.weights.push_back(w);
    return s;
}

}  // namespace

TEST_CASE("training error examples") {
    const auto spec = case_slab_discontinuous(3.0);
    const auto zero = zeros(Architecture::uniform(1, 1, 3));
    TrainingSet set;
    Point p;
    p.x = 2.0;
    set.interior = single(p, 2.0);
    const auto e = training_errors(zero, set, spec);
    CHECK(e[kInt] == doctest::Approx(std::sqrt(18.0)));
    CHECK(e[kSb] == 0.0);
    CHECK(e[kTb] == 0.0);
    CHECK(e[kData] == 0.0);

    // A network that reproduces the 1D Gaussian exactly is out of reach, so
    // zero residuals are checked through the loss identity instead.
    const auto g = case_1d_gaussian(1.0);
    const auto gset = build_training_set(g, {64, 4, 0, 0});
    const auto net = init(Architecture::uniform(1, 2, 5), 2);
    const auto errors = training_errors(net, gset, g);
    LossConfig one, two;
    two.lambda = 2.0;
    ad::Tape t1, t2;
    const double l1 = loss_forward(t1, on_tape(t1, net), gset, g, one).value();
    const double l2 = loss_forward(t2, on_tape(t2, net), gset, g, two).value();
    CHECK(errors[kInt] * errors[kInt] == doctest::Approx(l2 - l1).epsilon(1e-12));
    CHECK(errors[kInt] * errors[kInt] + errors[kSb] * errors[kSb] == doctest::Approx(l1).epsilon(1e-12));
    CHECK(training_errors(net, TrainingSet{}, g) == FamilyErrors{});
}

TEST_CASE("test sets") {
    const auto g = test_grid(case_1d_gaussian(1.0));
    CHECK(g.descriptor == "grid:512");
    CHECK(g.points.size() == 512);
    CHECK(g.points.weight_sum() == doctest::Approx(1.0));
    const auto s = test_grid(case_square_diagonal(1.0));
    CHECK(s.descriptor == "grid:128x128");
    CHECK(s.points.weight_sum() == doctest::Approx(1.0));
    const auto slab = test_grid(case_slab_discontinuous(1.0));
    CHECK(slab.points.weight_sum() == doctest::Approx(10.0));
    const auto m = test_grid(make_case("manufactured-graded-linear"), 512, 128, 1024);
    CHECK(m.descriptor == "sobol:1024");
    CHECK_THROWS_AS(test_grid(case_1d_gaussian(1.0), 0), UsageError);
}

TEST_CASE("generalization error examples") {
    const auto spec = case_2d_gaussian(1.0);
    const auto test = test_grid(spec);
    const auto exact = generalization_error(spec.exact, spec, test);
    CHECK(exact.abs == 0.0);
    CHECK(exact.rel == 0.0);

    const double delta = -0.03;
    const ScalarField shifted = [&](const Point& p) { return spec.exact(p) + delta; };
    CHECK(generalization_error(shifted, spec, test).abs == doctest::Approx(std::abs(delta)).epsilon(1e-12));

    const ScalarField zero = [](const Point&) { return 0.0; };
    CHECK(generalization_error(zero, spec, test).rel == doctest::Approx(1.0).epsilon(1e-14));

    const auto net = init(Architecture::uniform(2, 1, 4), 1);
    const auto from_params = generalization_error(net, spec, test);
    const auto from_field = generalization_error(network_field(net, spec), spec, test);
    CHECK(from_params.abs == doctest::Approx(from_field.abs).epsilon(1e-12));
    CHECK(from_params.rel == doctest::Approx(from_params.abs / generalization_error(zero, spec, test).abs));

    auto no_exact = spec;
    no_exact.exact = nullptr;
    CHECK_THROWS_AS(generalization_error(zero, no_exact, test), UsageError);

    CHECK(error_total_variation(spec.exact, spec, test) == 0.0);
    const auto slab = case_slab_discontinuous(1.0);
    const auto line = test_grid(slab);
    const ScalarField ramp = [&](const Point& p) { return slab.exact(p) + 0.01 * p.x; };
    CHECK(error_total_variation(ramp, slab, line) == doctest::Approx(0.01 * (line.points.points.back().x -
                                                                             line.points.points.front().x)));
}

TEST_CASE("property: generalization error satisfies the triangle inequality") {
    const auto spec = case_1d_gaussian(1.0);
    const auto test = test_grid(spec);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto arch = Architecture::uniform(1, 2, 4);
        const auto f = network_field(init(arch, 3 * s), spec);
        const auto g = network_field(init(arch, 3 * s + 1), spec);
        const auto h = network_field(init(arch, 3 * s + 2), spec);
        // Distances between networks measured by plugging one in as the exact field.
        auto with_exact = [&](const ScalarField& e) {
            auto c = spec;
            c.exact = e;
            return c;
        };
        const double fg = generalization_error(f, with_exact(g), test).abs;
        const double gh = generalization_error(g, with_exact(h), test).abs;
        const double fh = generalization_error(f, with_exact(h), test).abs;
        CHECK(fh <= fg + gh + 1e-14);
    }
}

TEST_CASE("forward bound examples") {
    BoundInputs b;
    b.V2 = 0.0;
    FamilyErrors e{};
    e[kTb] = 1e-4;
    e[kSb] = 2e-4;
    e[kInt] = 5e-4;
    CHECK(forward_bound(b, e) == doctest::Approx(3.0e-7).epsilon(1e-12));
    CHECK(forward_bound(b, FamilyErrors{}) == 0.0);
    b.N_int = 0;
    CHECK_THROWS_AS(forward_bound(b, e), UsageError);
}

TEST_CASE("steady bound examples") {
    BoundInputs b;
    b.N_sb = b.N_int = 4096;
    b.N_S = 16;
    b.a = 2;
    b.d = 1;
    const FamilyErrors e{1e-3, 1e-3, 0.0, 0.0};
    const double value = steady_forward_bound(b, e);
    const double ns = std::pow(16.0, -4.0);
    const double koksma = std::pow(std::log(4096.0), 2.0) / 4096.0;
    CHECK(value == doctest::Approx(2.0 * (2e-6) + 2.0 * (2.0 * koksma + ns)).epsilon(1e-13));
    CHECK(value == doctest::Approx(reference::steady_bound(b, e)).epsilon(1e-13));

    auto large = b;
    large.l = 1e12;
    large.N_sb = large.N_int = 1000000000;
    large.N_S = 1000;
    CHECK(steady_forward_bound(large, FamilyErrors{}) < 1e-15);

    auto half = b;
    half.l = 0.5;
    CHECK(steady_forward_bound(half, e) >= 2.0 * value * (1 - 1e-12));

    auto bad = b;
    bad.l = 0.0;
    CHECK_THROWS_AS(steady_forward_bound(bad, e), AssumptionError);
    bad.l = -1.0;
    CHECK_THROWS_AS(steady_forward_bound(bad, e), AssumptionError);
}

TEST_CASE("property: bounds match an independent implementation") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 100; ++i) {
        const auto b = random_inputs(rng);
        const auto e = random_errors(rng);
        CHECK(forward_bound(b, e) == doctest::Approx(reference::transient_bound(b, e)).epsilon(1e-12));
        CHECK(steady_forward_bound(b, e) == doctest::Approx(reference::steady_bound(b, e)).epsilon(1e-12));
        CHECK(forward_bound(b, e) >= 0.0);
        CHECK(steady_forward_bound(b, e) >= 0.0);
    }
}

TEST_CASE("property: bounds decrease in every point count") {
    // (log N)^p / N decreases only for N > e^p, so the tested range starts
    // above e^(2d+1).
    for (int d : {1, 2}) {
        const std::size_t start = d == 1 ? 64 : 150;
        BoundInputs b;
        b.d = d;
        const FamilyErrors e{1e-3, 1e-3, 1e-3, 0.0};
        for (std::size_t BoundInputs::*field : {&BoundInputs::N_int, &BoundInputs::N_sb, &BoundInputs::N_tb}) {
            double prev_f = INFINITY, prev_s = INFINITY;
            for (double n = double(start); n <= 1e6; n *= 1.05) {
                auto in = b;
                in.N_int = in.N_sb = in.N_tb = start;
                in.*field = static_cast<std::size_t>(n);
                const double f = forward_bound(in, e), s = steady_forward_bound(in, e);
                CHECK(f <= prev_f);
                if (field != &BoundInputs::N_tb) CHECK(s <= prev_s);
                prev_f = f;
                prev_s = s;
            }
        }
    }
}

TEST_CASE("report and serialization") {
    const auto spec = case_1d_gaussian(1.0);
    OptimizerConfig opt;
    opt.adam.max_iters = 10;
    opt.lbfgs.max_iters = 10;
    const auto result = train_forward(spec, {64, 4, 0, 0}, Architecture::uniform(1, 2, 5), LossConfig{}, opt, 4);
    const auto test = test_grid(spec);

    const auto r = report(result, spec, test, BoundInputs{});
    CHECK(r.case_name == "1d-gaussian");
    CHECK(r.training == result.training_errors);
    CHECK(r.layers == 2);
    CHECK(r.width == 5);
    CHECK(r.counts.interior == 64);
    REQUIRE(r.generalization);
    CHECK(r.generalization->abs == generalization_error(result.params, spec, test).abs);
    REQUIRE(r.bound);
    CHECK(r.bound->kind == BoundKind::steady);
    CHECK(r.test_set == "grid:512");

    const auto j = to_json(r);
    for (const char* key : {"case", "ke", "N_int", "N_sb", "N_tb", "N_d", "layers", "width", "lambda", "E_T", "E_G",
                            "bound", "seconds", "seed"})
        CHECK(j.contains(key));
    CHECK(j.at("bound").contains("steady"));
    const auto back = error_report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back) == j);
    CHECK(back.training == r.training);
    CHECK(back.generalization->rel == r.generalization->rel);

    const auto plain = report(result, spec, test);
    CHECK(!plain.bound);
    CHECK(to_json(plain).at("bound").is_null());

    auto no_exact = spec;
    no_exact.exact = nullptr;
    const auto blind = report(result, no_exact, test);
    CHECK(!blind.generalization);
    CHECK(to_json(blind).at("E_G").is_null());
    CHECK(to_json(error_report_from_json(to_json(blind))) == to_json(blind));

    const auto inverse = make_case("2d-gaussian-inverse");
    const auto inv = train(inverse, {32, 0, 0, 32}, Architecture::uniform(2, 1, 4), LossConfig{}, opt, 1);
    const auto inv_report = report(inv, inverse, test_grid(inverse), BoundInputs{});
    CHECK(!inv_report.bound);
    CHECK(inv_report.counts.data == 32);

    CHECK(table_header() == "case,N_int,N_sb,layers,width,lambda,E_T,L2_abs,L2_rel,seconds");
    std::istringstream row(table_row(r));
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 10);
    CHECK(cells[0] == "1d-gaussian");
    CHECK(cells[1] == "64");
    CHECK(cells[3] == "2");
    CHECK(cells[4] == "5");
    const double et = std::hypot(r.training[0], r.training[1], r.training[2]);
    CHECK(std::stod(cells[6]) == doctest::Approx(et).epsilon(1e-6));
}
