#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gradix/case_spec.hpp"
#include "gradix/config.hpp"
#include "gradix/metrics.hpp"
#include "gradix/training.hpp"

namespace gradix {

enum ExitCode : int { kExitOk = 0, kExitVerifyFailed = 1, kExitUsage = 2, kExitTrainingAbort = 3 };

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    bool desk = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
};

/// Trains one configuration and writes run.json, field.csv, loss.csv and
/// params.json into the output directory.
int cmd_run(const CommandOptions& opts, std::ostream& log);

/// Ensemble training; writes leaderboard.csv plus the best run's files.
int cmd_sweep(const CommandOptions& opts, std::ostream& log);

/// Property suite; `erf_fault` flips the sign of erf for mutation testing.
int cmd_verify(std::ostream& log, bool erf_fault = false);

struct OracleOptions {
    std::string case_name;
    std::optional<double> ke;
    std::filesystem::path points;
    std::filesystem::path out = ".";
    int steps = 4000;
};

/// Closed form against the characteristic integrator at the points of a
/// file (one point per line, x or x,y); writes oracle.csv.
int cmd_oracle(const OracleOptions& opts, std::ostream& log);

// ---- artifacts -------------------------------------------------------------

/// `x[,y][,theta,phi],I_exact,I_pred,abs_err` over the test set, 17 digits.
void write_field_csv(std::ostream& out, const CaseSpec& spec, const MlpParams& params, const TestSet& test);

/// `iteration,loss`, 17 digits.
void write_loss_csv(std::ostream& out, const std::vector<double>& history);

/// `rank,hidden_layers,width,lambda,seed,final_loss,seconds,status`.
void write_leaderboard_csv(std::ostream& out, const std::vector<LeaderboardEntry>& board);

/// run.json payload: the error report, the training result and the config.
nlohmann::json run_json(const ErrorReport& report, const TrainResult& result, const RunConfig& config);

/// Reads points for the oracle command; throws UsageError when the file is
/// missing, empty or has the wrong column count for the case.
std::vector<Point> read_points(const std::filesystem::path& path, const CaseSpec& spec);

}  // namespace gradix
