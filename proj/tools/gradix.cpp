#include <CLI11.hpp>

#include <iostream>

#include "gradix/commands.hpp"
#include "gradix/error.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Physics-informed neural network solver for radiative transfer"};
    app.require_subcommand(1, 1);

    gradix::CommandOptions opts;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "Run configuration (JSON)");
        cmd->add_flag("--desk", opts.desk, "Reduced point counts and iteration budgets");
        cmd->add_option("--seed", seed, "Override the configured seed");
        cmd->add_option("--out", out_dir, "Output directory");
    };

    auto* run = app.add_subcommand("run", "Train one configuration");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "Ensemble training over a hyperparameter grid");
    add_common(sweep);
    auto* verify = app.add_subcommand("verify", "Run the property suite");
    add_common(verify);
    bool erf_fault = false;
    verify->add_flag("--inject-erf-fault", erf_fault)->group("");
    auto* oracle = app.add_subcommand("oracle", "Compare closed forms with the characteristic integrator");
    add_common(oracle);
    gradix::OracleOptions oracle_opts;
    double ke = 0.0;
    std::string points;
    std::string case_name;
    oracle->add_option("--case", case_name, "Case name");
    oracle->add_option("--ke", ke, "Extinction coefficient");
    oracle->add_option("--points", points, "Points file (x or x,y per line)");
    oracle->add_option("--steps", oracle_opts.steps, "RK4 steps along each characteristic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return gradix::kExitUsage;
    }

    if (!config_path.empty()) opts.config = config_path;
    if (!out_dir.empty()) opts.out = out_dir;
    auto* active = app.get_subcommands().front();
    if (active->count("--seed") > 0) opts.seed = seed;

    if (active == run) return gradix::cmd_run(opts, std::cout);
    if (active == sweep) return gradix::cmd_sweep(opts, std::cout);
    if (active == verify) return gradix::cmd_verify(std::cout, erf_fault);

    try {
        if (opts.config) {
            const auto cfg = gradix::load_run_config(*opts.config);
            oracle_opts.case_name = cfg.case_name;
            oracle_opts.ke = cfg.physics.ke;
        }
    } catch (const gradix::UsageError& e) {
        std::cout << "error: " << e.what() << '\n';
        return gradix::kExitUsage;
    }
    if (!case_name.empty()) oracle_opts.case_name = case_name;
    if (oracle->count("--ke") > 0) oracle_opts.ke = ke;
    if (oracle_opts.case_name.empty() || points.empty()) {
        std::cout << "error: oracle needs --case (or --config) and --points\n";
        return gradix::kExitUsage;
    }
    oracle_opts.points = points;
    if (opts.out) oracle_opts.out = *opts.out;
    return gradix::cmd_oracle(oracle_opts, std::cout);
}
