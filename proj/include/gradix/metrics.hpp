#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradix/case_spec.hpp"
#include "gradix/network.hpp"
#include "gradix/sampling.hpp"
#include "gradix/training.hpp"

namespace gradix {

/// Evaluation set for the generalization error.
struct TestSet {
    PointSet points;
    std::string descriptor;
};

/// Midpoint grid of 512 cells (1D) or 128 x 128 cells (2D) over the spatial
/// box for fixed-direction steady cases; otherwise a Sobol set of
/// `qmc_points` over every network input. Weights are cell measures.
TestSet test_grid(const CaseSpec& spec, std::size_t n_1d = 512, std::size_t n_2d = 128,
                  std::size_t qmc_points = 16384);

struct GeneralizationError {
    double abs = 0.0;
    double rel = 0.0;
};

/// abs = sqrt(sum w |I - I_pred|^2), rel = abs / sqrt(sum w |I|^2) (rel is
/// abs when the exact norm vanishes). Throws UsageError without an exact solution.
GeneralizationError generalization_error(const ScalarField& predicted, const CaseSpec& spec, const TestSet& test);
GeneralizationError generalization_error(const MlpParams& params, const CaseSpec& spec, const TestSet& test);

/// Sum of |e_{i+1} - e_i| along a 1D test grid, e = I_pred - I.
double error_total_variation(const ScalarField& predicted, const CaseSpec& spec, const TestSet& test);

/// Constants and counts entering the bound formulas. Unknown theorem
/// constants are user inputs.
struct BoundInputs {
    double T = 1.0;            // time horizon
    double nu = 1.0;
    double c = 1.0;
    double ks_inf = 0.0;       // sup |k_s|
    double sigma_g_inf = 0.0;  // sup |Sigma_g|
    double V2 = 1.0;           // Hardy-Krause constant of the transient bound
    std::size_t N_int = 1;
    std::size_t N_sb = 1;
    std::size_t N_tb = 1;
    std::size_t N_S = 1;       // angular quadrature size
    int a = 1;                 // angular quadrature order
    int d = 1;                 // spatial dimension
    double l = 1.0;            // coercivity margin
    double C_eps = 1.0;
    double hk_sb = 1.0;        // Hardy-Krause variation of R_sb
    double hk_int = 1.0;       // Hardy-Krause variation of R_int
    double V_bar = 1.0;
};

/// Transient forward bound. `errors` are (int, sb, tb, d); nonpositive counts
/// throw UsageError.
double forward_bound(const BoundInputs& in, const FamilyErrors& errors);

/// Steady forward bound. Throws AssumptionError for l <= 0 and UsageError
/// for nonpositive counts.
double steady_forward_bound(const BoundInputs& in, const FamilyErrors& errors);

enum class BoundKind { forward, steady };

struct BoundValue {
    BoundKind kind = BoundKind::steady;
    double value = 0.0;
};

struct ErrorReport {
    std::string case_name;
    double ke = 0.0;
    PointCounts counts;
    std::size_t layers = 0;  // hidden layers
    std::size_t width = 0;
    double lambda = 0.0;
    FamilyErrors training{};
    std::optional<GeneralizationError> generalization;  // absent without an exact solution
    std::string test_set;
    std::optional<BoundValue> bound;
    double seconds = 0.0;
    std::uint64_t seed = 0;
};

/// Assembles the report of a trained run. When `bound` is given its counts
/// and dimension are taken from the run and the case. Inverse cases get no
/// bound.
ErrorReport report(const TrainResult& result, const CaseSpec& spec, const TestSet& test,
                   const std::optional<BoundInputs>& bound = std::nullopt);

nlohmann::json to_json(const ErrorReport& r);
ErrorReport error_report_from_json(const nlohmann::json& j);

/// `case,N_int,N_sb,layers,width,lambda,E_T,L2_abs,L2_rel,seconds`.
std::string table_header();
std::string table_row(const ErrorReport& r);

}  // namespace gradix
