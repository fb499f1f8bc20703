#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradix/autodiff.hpp"
#include "gradix/case_spec.hpp"
#include "gradix/network.hpp"
#include "gradix/sampling.hpp"

namespace gradix {

struct LossConfig {
    double lambda = 1.0;      // interior-residual weight
    double lambda_reg = 0.0;  // must stay below 0.1
    int reg_order = 2;        // q in {1, 2}

    void validate() const;
};

struct AdamConfig {
    double step = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t max_iters = 500;
    double grad_tol = 1e-12;
};

struct LbfgsConfig {
    std::size_t memory = 50;
    std::size_t max_iters = 2000;
    double grad_tol = 1e-9;
    double c1 = 1e-4;
    double c2 = 0.9;
    double curvature_floor = 1e-12;  // pairs with s.y at or below this are skipped
    std::size_t stall_window = 20;
    double stall_tol = 1e-14;
    std::size_t max_line_search = 30;
};

struct OptimizerConfig {
    AdamConfig adam;
    LbfgsConfig lbfgs;

    void validate() const;
};

/// f(params) with the gradient written into `grad` (same length).
using Objective = std::function<double(std::span<const double> params, std::span<double> grad)>;

struct OptimizeResult {
    std::vector<double> params;  // best point seen
    double loss = 0.0;           // objective at `params`
    std::vector<double> history; // objective per iteration
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    std::string stop_reason;
};

/// Adam; returns the best iterate. Throws TrainingAbort on a non-finite loss.
OptimizeResult adam_minimize(const Objective& f, std::vector<double> x0, const AdamConfig& cfg);

/// Limited-memory BFGS with a strong-Wolfe line search. A failed line search
/// is retried once along steepest descent; a second failure stops the run.
OptimizeResult lbfgs_minimize(const Objective& f, std::vector<double> x0, const LbfgsConfig& cfg);

// ---- losses --------------------------------------------------------------

/// sum w_sb R_sb^2 + sum w_tb R_tb^2 + lambda sum w_int R_int^2 + lambda_reg |Theta|_q^q.
ad::Var loss_forward(ad::Tape& tape, const BasicMlp<ad::Var>& net, const TrainingSet& sets, const CaseSpec& spec,
                     const LossConfig& cfg);
/// sum w_d R_d^2 + sum w_sb R_sb^2 + lambda sum w_int R_int^2 + lambda_reg |Theta|_q^q.
ad::Var loss_inverse(ad::Tape& tape, const BasicMlp<ad::Var>& net, const TrainingSet& sets, const CaseSpec& spec,
                     const LossConfig& cfg);

/// The same sums with an arbitrary callable in place of the network (no
/// regularization term; residual derivatives by finite differences).
double loss_forward(const ScalarField& field, const TrainingSet& sets, const CaseSpec& spec, const LossConfig& cfg);
double loss_inverse(const ScalarField& field, const TrainingSet& sets, const CaseSpec& spec, const LossConfig& cfg);

enum class Engine { batched, tape };

/// Loss of `spec` over `sets` as a function of the flat parameter vector.
Objective make_objective(const CaseSpec& spec, const TrainingSet& sets, const Architecture& arch,
                         const LossConfig& cfg, Engine engine = Engine::batched);

/// Per-family training errors sqrt(sum w R^2): interior, spatial, temporal, data.
using FamilyErrors = std::array<double, 4>;

// ---- drivers -------------------------------------------------------------

struct TrainResult {
    std::string case_name;
    MlpParams params;
    double final_loss = 0.0;
    std::vector<double> loss_history;
    FamilyErrors training_errors{};
    double seconds = 0.0;
    std::uint64_t seed = 0;
    Architecture arch;
    LossConfig loss;
    OptimizerConfig optimizer;
    PointCounts counts;
    std::size_t adam_iterations = 0;
    std::size_t lbfgs_iterations = 0;
    std::string stop_reason;
};

/// Adam warm-up followed by L-BFGS on the forward loss.
TrainResult train_forward(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch,
                          const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t seed,
                          Engine engine = Engine::batched);

/// As train_forward with the data-driven loss.
TrainResult train_inverse(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch,
                          const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t seed,
                          Engine engine = Engine::batched);

/// Dispatches on spec.inverse.
TrainResult train(const CaseSpec& spec, const PointCounts& counts, const Architecture& arch, const LossConfig& loss,
                  const OptimizerConfig& opt, std::uint64_t seed, Engine engine = Engine::batched);

/// Training errors of `params` on the case's own training set.
FamilyErrors training_errors(const MlpParams& params, const TrainingSet& sets, const CaseSpec& spec);

struct EnsembleConfig {
    std::vector<std::size_t> hidden_layers;
    std::vector<std::size_t> widths;
    std::vector<double> lambdas;
    std::size_t retrains = 1;  // n_theta
    std::size_t threads = 0;   // 0: GRADIX_THREADS or hardware concurrency

    std::size_t size() const { return hidden_layers.size() * widths.size() * lambdas.size() * retrains; }
    void validate() const;
};

struct LeaderboardEntry {
    std::size_t hidden_layers = 0;
    std::size_t width = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    double final_loss = 0.0;
    double seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct EnsembleResult {
    TrainResult best;
    std::vector<LeaderboardEntry> leaderboard;  // sorted by loss, ties by seed
};

/// Trains every grid tuple `retrains` times (seeds base_seed + r) on a worker
/// pool and keeps the lowest final loss.
EnsembleResult ensemble_train(const CaseSpec& spec, const PointCounts& counts, const EnsembleConfig& grid,
                              const LossConfig& loss, const OptimizerConfig& opt, std::uint64_t base_seed);

/// Worker count from GRADIX_THREADS (falls back to hardware concurrency).
std::size_t default_thread_count();

/// run.json payload: hyperparameters, seed, loss history every 10 iterations,
/// training errors and wall-clock.
nlohmann::json to_json(const TrainResult& result);

}  // namespace gradix
