#include "gradix/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "gradix/error.hpp"
#include "gradix/rte.hpp"
#include "gradix/verify.hpp"

namespace gradix {

namespace fs = std::filesystem;

namespace {

void set_precision(std::ostream& os) {
    os << std::setprecision(17) << std::defaultfloat;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write '" + path.string() + "'");
    set_precision(out);
    return out;
}

RunConfig resolve_config(const CommandOptions& opts) {
    if (!opts.config) throw UsageError("--config PATH is required");
    RunConfig c = load_run_config(*opts.config);
    if (opts.desk) apply_desk(c);
    if (opts.seed) c.seed = *opts.seed;
    if (opts.out) c.out = opts.out->string();
    return c;
}

void write_run_artifacts(const RunConfig& config, const CaseSpec& spec, const TrainResult& result,
                         std::ostream& log) {
    const fs::path dir(config.out);
    fs::create_directories(dir);
    const TestSet test = test_grid(spec);
    const ErrorReport rep = report(result, spec, test, config.bound);
    {
        auto out = open_output(dir / "run.json");
        out << run_json(rep, result, config).dump(2) << '\n';
    }
    {
        auto out = open_output(dir / "field.csv");
        write_field_csv(out, spec, result.params, test);
    }
    {
        auto out = open_output(dir / "loss.csv");
        write_loss_csv(out, result.loss_history);
    }
    save_params(dir / "params.json", result.params);
    log << table_header() << '\n' << table_row(rep) << '\n';
    log << "wrote " << (dir / "run.json").string() << ", field.csv, loss.csv, params.json\n";
}

template <class F>
int guarded(std::ostream& log, F&& body) {
    try {
        return body();
    } catch (const UsageError& e) {
        log << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TrainingAbort& e) {
        log << "training aborted: " << e.what() << '\n';
        return kExitTrainingAbort;
    } catch (const std::exception& e) {
        log << "training aborted: " << e.what() << '\n';
        return kExitTrainingAbort;
    }
}

}  // namespace

void write_field_csv(std::ostream& out, const CaseSpec& spec, const MlpParams& params, const TestSet& test) {
    set_precision(out);
    const bool two_d = spec.spatial_dim == 2;
    const bool angles = spec.has_angles();
    const bool time = spec.has_time();
    if (time) out << "t,";
    out << "x";
    if (two_d) out << ",y";
    if (angles) out << ",theta,phi";
    out << ",I_exact,I_pred,abs_err\n";
    for (const auto& p : test.points.points) {
        const double pred = network_at(params, spec, p);
        if (time) out << p.t << ',';
        out << p.x;
        if (two_d) out << ',' << p.y;
        if (angles) out << ',' << p.theta << ',' << p.phi;
        if (spec.has_exact()) {
            const double exact = spec.exact(p);
            out << ',' << exact << ',' << pred << ',' << std::abs(pred - exact) << '\n';
        } else {
            out << ",," << pred << ",\n";
        }
    }
}

void write_loss_csv(std::ostream& out, const std::vector<double>& history) {
    set_precision(out);
    out << "iteration,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) out << i << ',' << history[i] << '\n';
}

void write_leaderboard_csv(std::ostream& out, const std::vector<LeaderboardEntry>& board) {
    set_precision(out);
    out << "rank,hidden_layers,width,lambda,seed,final_loss,seconds,status\n";
    for (std::size_t i = 0; i < board.size(); ++i) {
        const auto& e = board[i];
        out << i + 1 << ',' << e.hidden_layers << ',' << e.width << ',' << e.lambda << ',' << e.seed << ','
            << e.final_loss << ',' << e.seconds << ',';
        if (e.failed) {
            std::string msg = e.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            out << "failed: " << msg;
        } else {
            out << "ok";
        }
        out << '\n';
    }
}

nlohmann::json run_json(const ErrorReport& report, const TrainResult& result, const RunConfig& config) {
    nlohmann::json j;
    j["report"] = to_json(report);
    j["train"] = to_json(result);
    j["config"] = to_json(config);
    return j;
}

std::vector<Point> read_points(const fs::path& path, const CaseSpec& spec) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read points file '" + path.string() + "'");
    const std::size_t want = static_cast<std::size_t>(spec.spatial_dim);
    std::vector<Point> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream is(line);
        std::vector<double> v;
        std::string tok;
        while (is >> tok) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                if (out.empty() && v.empty()) break;  // header line
                throw UsageError(path.string() + ":" + std::to_string(lineno) + ": not a number '" + tok + "'");
            }
        }
        if (v.empty()) continue;
        if (v.size() != want) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(want) +
                             " coordinate(s)");
        }
        Point p;
        p.x = v[0];
        if (want == 2) p.y = v[1];
        const Box box = spec.spatial_box();
        if (!box.x.contains(p.x) || (want == 2 && !box.y.contains(p.y))) {
            throw UsageError(path.string() + ":" + std::to_string(lineno) + ": point outside the domain");
        }
        out.push_back(p);
    }
    if (out.empty()) throw UsageError("points file '" + path.string() + "' has no points");
    return out;
}

int cmd_run(const CommandOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig config = resolve_config(opts);
        const CaseSpec spec = build_case(config);
        check_counts(spec, config.counts);
        const Architecture arch = build_architecture(config, spec);
        log << "training " << spec.name << " ke=" << spec.ke << " seed=" << config.seed << '\n';
        const TrainResult result = train(spec, config.counts, arch, config.loss, config.optimizer, config.seed);
        write_run_artifacts(config, spec, result, log);
        return static_cast<int>(kExitOk);
    });
}

int cmd_sweep(const CommandOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig config = resolve_config(opts);
        if (!config.ensemble) throw UsageError("sweep: config has no 'ensemble' grid");
        const CaseSpec spec = build_case(config);
        check_counts(spec, config.counts);
        log << "sweeping " << spec.name << ": " << config.ensemble->size() << " runs\n";
        const EnsembleResult res =
            ensemble_train(spec, config.counts, *config.ensemble, config.loss, config.optimizer, config.seed);
        const fs::path dir(config.out);
        fs::create_directories(dir);
        {
            auto out = open_output(dir / "leaderboard.csv");
            write_leaderboard_csv(out, res.leaderboard);
        }
        RunConfig best = config;
        best.hidden_layers = res.best.arch.hidden_layers();
        best.width = res.best.arch.widths[1];
        best.loss = res.best.loss;
        best.seed = res.best.seed;
        write_run_artifacts(best, spec, res.best, log);
        return static_cast<int>(kExitOk);
    });
}

int cmd_verify(std::ostream& log, bool erf_fault) {
    set_erf_fault(erf_fault);
    const auto checks = run_verify_suite();
    set_erf_fault(false);
    const bool ok = print_checks(log, checks);
    if (!ok) {
        log << "failed:";
        for (const auto& c : checks) {
            if (!c.passed) log << ' ' << c.name;
        }
        log << '\n';
    }
    return ok ? kExitOk : kExitVerifyFailed;
}

int cmd_oracle(const OracleOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        CaseOptions o;
        o.ke = opts.ke;
        const CaseSpec spec = make_case(opts.case_name, o);
        if (!spec.direction) throw UsageError("oracle: case '" + spec.name + "' has no fixed transport direction");
        if (!spec.has_exact()) throw UsageError("oracle: case '" + spec.name + "' has no closed form");
        if (opts.steps < 1) throw UsageError("oracle: steps must be positive");
        const auto points = read_points(opts.points, spec);
        fs::create_directories(opts.out);
        auto out = open_output(opts.out / "oracle.csv");
        out << (spec.spatial_dim == 2 ? "x,y," : "x,") << "I_exact,I_oracle,abs_diff\n";
        double worst = 0.0;
        for (const auto& p : points) {
            const double exact = spec.exact(p);
            const double oracle = oracle_integrate_characteristic(spec, p, opts.steps);
            const double d = std::abs(exact - oracle);
            worst = std::max(worst, d);
            out << p.x << ',';
            if (spec.spatial_dim == 2) out << p.y << ',';
            out << exact << ',' << oracle << ',' << d << '\n';
        }
        log << spec.name << " ke=" << spec.ke << ": " << points.size() << " points, max abs diff "
            << std::scientific << std::setprecision(3) << worst << '\n';
        return static_cast<int>(kExitOk);
    });
}

}  // namespace gradix
