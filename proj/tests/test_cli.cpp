#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gradix/cases.hpp"
#include "gradix/commands.hpp"
#include "gradix/config.hpp"
#include "gradix/error.hpp"
#include "gradix/rte.hpp"

using namespace gradix;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(GRADIX_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("gradix-test-cli-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

nlohmann::json tiny_config(const fs::path& out) {
    auto j = nlohmann::json::parse(R"({
        "case": "1d-gaussian",
        "physics": {"ke": 1},
        "counts": {"N_int": 64, "N_sb": 4},
        "architecture": {"hidden_layers": 2, "width": 6},
        "loss": {"lambda": 1},
        "optimizer": {"adam": {"max_iters": 20}, "lbfgs": {"max_iters": 30}},
        "bound": {},
        "seed": 3
    })");
    j["out"] = out.string();
    return j;
}

fs::path write_text(const fs::path& path, const std::string& text) {
    std::ofstream(path) << text;
    return path;
}

fs::path write_json(const fs::path& path, const nlohmann::json& j) { return write_text(path, j.dump(2)); }

CommandOptions with_config(const fs::path& path) {
    CommandOptions o;
    o.config = path;
    return o;
}

}  // namespace

TEST_CASE("shipped configs parse") {
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".json") continue;
        INFO(entry.path().filename().string());
        RunConfig c;
        CHECK_NOTHROW(c = load_run_config(entry.path()));
        CHECK_NOTHROW(check_counts(build_case(c), c.counts));
        ++count;
    }
    CHECK(count == 18);

    const auto sweep = load_run_config(kConfigs / "example1_sweep.json");
    REQUIRE(sweep.ensemble);
    CHECK(sweep.ensemble->size() == 48);

    const auto t2 = load_run_config(kConfigs / "table2_case3.json");
    CHECK(t2.case_name == "1d-gaussian");
    CHECK(t2.physics.ke == 10.0);
    CHECK(t2.loss.lambda == 0.1);
    CHECK(t2.counts.interior == 8192);
    CHECK(t2.counts.spatial_boundary == 4096);
}

TEST_CASE("desk scale") {
    auto c = load_run_config(kConfigs / "table2_case1.json");
    apply_desk(c);
    CHECK(c.counts.interior == kDeskInterior);
    CHECK(c.counts.spatial_boundary == kDeskBoundary);
    CHECK(c.counts.temporal_boundary == 0);
    CHECK(c.optimizer.adam.max_iters == 250);
    CHECK(c.optimizer.lbfgs.max_iters == 1000);

    auto inv = load_run_config(kConfigs / "table8_case1.json");
    apply_desk(inv);
    CHECK(inv.counts.interior == kDeskInterior);
    CHECK(inv.counts.data == kDeskBoundary);
    CHECK(inv.counts.spatial_boundary == 0);
}

TEST_CASE("config validation") {
    const auto good = tiny_config("x");
    const auto parsed = parse_run_config(good);
    CHECK(parse_run_config(to_json(parsed)) .out == parsed.out);
    CHECK(to_json(parse_run_config(to_json(parsed))) == to_json(parsed));
    CHECK(parse_run_config(nlohmann::json{{"case", "slab-discontinuous"}, {"counts", {{"N_int", 8}, {"N_sb", 1}}}})
              .out == "out/slab-discontinuous");

    auto bad = good;
    bad["typo"] = 1;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["loss"]["lamda"] = 1;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["case"] = "nope";
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["counts"]["N_d"] = 16;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["counts"]["N_tb"] = 16;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["counts"]["N_sb"] = 0;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["loss"]["lambda_reg"] = 0.5;
    CHECK_THROWS_AS(parse_run_config(bad), UsageError);
    bad = good;
    bad["physics"]["profile"] = "linear";
    CHECK_THROWS_AS(build_case(parse_run_config(bad)), UsageError);

    const auto dir = scratch("config");
    CHECK_THROWS_AS(load_run_config(dir / "missing.json"), UsageError);
    CHECK_THROWS_AS(load_run_config(write_text(dir / "broken.json", "{\"case\": ")), UsageError);
}

TEST_CASE("csv writers round-trip at 17 digits") {
    const auto spec = case_2d_gaussian(1.0);
    const auto net = init(Architecture::uniform(2, 1, 4), 6);
    const auto test = test_grid(spec, 512, 16);
    std::stringstream field;
    write_field_csv(field, spec, net, test);
    std::string line;
    std::getline(field, line);
    CHECK(line == "x,y,I_exact,I_pred,abs_err");
    std::size_t i = 0;
    while (std::getline(field, line)) {
        double x, y, e, q, d;
        char c;
        std::stringstream ss(line);
        ss >> x >> c >> y >> c >> e >> c >> q >> c >> d;
        const Point& p = test.points.points[i++];
        CHECK(x == p.x);
        CHECK(y == p.y);
        CHECK(e == spec.exact(p));
        CHECK(q == network_at(net, spec, p));
        CHECK(d == std::abs(e - q));
    }
    CHECK(i == 256);

    const std::vector<double> history{1.0 / 3.0, 2.0 / 7.0, 1e-300};
    std::stringstream loss;
    write_loss_csv(loss, history);
    std::getline(loss, line);
    CHECK(line == "iteration,loss");
    for (std::size_t k = 0; k < history.size(); ++k) {
        std::getline(loss, line);
        CHECK(std::stod(line.substr(line.find(',') + 1)) == history[k]);
    }
}

TEST_CASE("read_points") {
    const auto dir = scratch("points");
    const auto g = case_2d_gaussian(1.0);
    const auto pts = read_points(write_text(dir / "ok.csv", "x,y\n# comment\n0.1,0.2\n0.3 0.4\n\n"), g);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].x == 0.3);
    CHECK(pts[1].y == 0.4);
    CHECK_THROWS_AS(read_points(write_text(dir / "empty.csv", ""), g), UsageError);
    CHECK_THROWS_AS(read_points(write_text(dir / "cols.csv", "0.1,0.2,0.3\n"), g), UsageError);
    CHECK_THROWS_AS(read_points(write_text(dir / "outside.csv", "0.1,1.5\n"), g), UsageError);
    CHECK_THROWS_AS(read_points(dir / "missing.csv", g), UsageError);
}

TEST_CASE("cmd_run") {
    const auto dir = scratch("run");
    const auto config = write_json(dir / "tiny.json", tiny_config(dir / "a"));
    std::stringstream log;
    REQUIRE(cmd_run(with_config(config), log) == kExitOk);
    for (const char* f : {"run.json", "field.csv", "loss.csv", "params.json"}) CHECK(fs::exists(dir / "a" / f));
    CHECK(read_csv(dir / "a" / "field.csv").size() == 513);

    const auto run = nlohmann::json::parse(slurp(dir / "a" / "run.json"));
    CHECK(run.at("report").at("case") == "1d-gaussian");
    CHECK(run.at("report").at("seed") == 3);
    CHECK(run.at("report").at("bound").contains("steady"));

    auto opts = with_config(config);
    opts.out = dir / "b";
    REQUIRE(cmd_run(opts, log) == kExitOk);
    CHECK(slurp(dir / "a" / "field.csv") == slurp(dir / "b" / "field.csv"));
    CHECK(slurp(dir / "a" / "params.json") == slurp(dir / "b" / "params.json"));
    auto strip = [](nlohmann::json j) {
        j["report"].erase("seconds");
        j["train"].erase("seconds");
        j["config"].erase("out");
        return j.dump();
    };
    CHECK(strip(run) == strip(nlohmann::json::parse(slurp(dir / "b" / "run.json"))));

    opts.seed = 4;
    opts.out = dir / "c";
    REQUIRE(cmd_run(opts, log) == kExitOk);
    CHECK(nlohmann::json::parse(slurp(dir / "c" / "run.json")).at("report").at("seed") == 4);
    CHECK(slurp(dir / "a" / "params.json") != slurp(dir / "c" / "params.json"));

    CHECK(cmd_run(CommandOptions{}, log) == kExitUsage);
    CHECK(cmd_run(with_config(dir / "missing.json"), log) == kExitUsage);
    auto bad = tiny_config(dir / "d");
    bad["counts"]["N_d"] = 3;
    CHECK(cmd_run(with_config(write_json(dir / "bad.json", bad)), log) == kExitUsage);
    auto diverge = tiny_config(dir / "e");
    diverge["optimizer"]["adam"]["step"] = 1e300;
    CHECK(cmd_run(with_config(write_json(dir / "diverge.json", diverge)), log) == kExitTrainingAbort);
}

TEST_CASE("cmd_sweep") {
    const auto dir = scratch("sweep");
    auto j = tiny_config(dir / "s");
    j["ensemble"] = {{"hidden_layers", {1, 2}}, {"widths", {4}}, {"lambdas", {0.5, 1.0}}, {"retrains", 2}};
    std::stringstream log;
    REQUIRE(cmd_sweep(with_config(write_json(dir / "sweep.json", j)), log) == kExitOk);
    const auto rows = read_csv(dir / "s" / "leaderboard.csv");
    REQUIRE(rows.size() == 9);
    CHECK(rows[0] == std::vector<std::string>{"rank", "hidden_layers", "width", "lambda", "seed", "final_loss",
                                              "seconds", "status"});
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i - 1][5]) <= std::stod(rows[i][5]));
    CHECK(fs::exists(dir / "s" / "run.json"));
    CHECK(fs::exists(dir / "s" / "field.csv"));

    j["ensemble"] = {{"hidden_layers", {1}}, {"widths", {4}}, {"lambdas", {1.0}}, {"retrains", 1}};
    j["out"] = (dir / "one").string();
    REQUIRE(cmd_sweep(with_config(write_json(dir / "one.json", j)), log) == kExitOk);
    CHECK(read_csv(dir / "one" / "leaderboard.csv").size() == 2);

    j.erase("ensemble");
    CHECK(cmd_sweep(with_config(write_json(dir / "none.json", j)), log) == kExitUsage);
}

TEST_CASE("cmd_verify") {
    std::stringstream ok;
    CHECK(cmd_verify(ok) == kExitOk);
    CHECK(ok.str().find("FAIL") == std::string::npos);
    std::stringstream broken;
    CHECK(cmd_verify(broken, true) == kExitVerifyFailed);
    CHECK(broken.str().find("erf-vs-maclaurin") != std::string::npos);
    std::stringstream again;
    CHECK(cmd_verify(again) == kExitOk);
}

TEST_CASE("cmd_oracle") {
    const auto dir = scratch("oracle");
    std::string line_pts, plane_pts;
    for (int i = 1; i <= 20; ++i) {
        line_pts += std::to_string(i / 20.0) + "\n";
        plane_pts += std::to_string(i / 21.0) + "," + std::to_string(1.0 - i / 22.0) + "\n";
    }
    auto max_diff = [&](const fs::path& csv) {
        const auto rows = read_csv(csv);
        double worst = 0.0;
        for (std::size_t i = 1; i < rows.size(); ++i) worst = std::max(worst, std::stod(rows[i].back()));
        return std::make_pair(worst, rows.size() - 1);
    };
    std::stringstream log;

    OracleOptions one;
    one.case_name = "1d-gaussian";
    one.ke = 0.1;
    one.points = write_text(dir / "line.csv", line_pts);
    one.out = dir / "one";
    REQUIRE(cmd_oracle(one, log) == kExitOk);
    const auto [w1, n1] = max_diff(dir / "one" / "oracle.csv");
    CHECK(n1 == 20);
    CHECK(w1 < 1e-6);
    CHECK(read_csv(dir / "one" / "oracle.csv")[0] ==
          std::vector<std::string>{"x", "I_exact", "I_oracle", "abs_diff"});

    OracleOptions two;
    two.case_name = "2d-gaussian";
    two.ke = 1.0;
    two.points = write_text(dir / "plane.csv", plane_pts);
    two.out = dir / "two";
    REQUIRE(cmd_oracle(two, log) == kExitOk);
    CHECK(max_diff(dir / "two" / "oracle.csv").first < 1e-5);

    auto empty = one;
    empty.points = write_text(dir / "empty.csv", "");
    CHECK(cmd_oracle(empty, log) == kExitUsage);
    auto angular = one;
    angular.case_name = "manufactured-graded-linear";
    CHECK(cmd_oracle(angular, log) == kExitUsage);
    auto unknown = one;
    unknown.case_name = "nope";
    CHECK(cmd_oracle(unknown, log) == kExitUsage);
}
