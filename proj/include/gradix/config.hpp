#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "gradix/case_spec.hpp"
#include "gradix/cases.hpp"
#include "gradix/metrics.hpp"
#include "gradix/network.hpp"
#include "gradix/sampling.hpp"
#include "gradix/training.hpp"

namespace gradix {

/// Reduced point counts used by --desk.
inline constexpr std::size_t kDeskInterior = 2048;
inline constexpr std::size_t kDeskBoundary = 512;

struct RunConfig {
    std::string case_name;
    CaseOptions physics;
    std::optional<IndexProfile> profile;  // manufactured cases only
    PointCounts counts;
    std::size_t hidden_layers = 4;
    std::size_t width = 20;
    LossConfig loss;
    OptimizerConfig optimizer;
    std::optional<EnsembleConfig> ensemble;
    std::optional<BoundInputs> bound;
    std::uint64_t seed = 0;
    std::string out;
};

/// Parses and validates a run configuration. Unknown keys, wrong types and
/// counts that do not fit the case kind throw UsageError.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical JSON form (parse_run_config(to_json(c)) reproduces c).
nlohmann::json to_json(const RunConfig& c);

/// Desk scale: N_int = 2048, N_sb = 512, the other nonzero families capped at
/// 512, and both optimizer iteration budgets halved.
void apply_desk(RunConfig& c);

CaseSpec build_case(const RunConfig& c);
Architecture build_architecture(const RunConfig& c, const CaseSpec& spec);

/// Throws UsageError unless the counts fit the case (forward or inverse,
/// steady or transient).
void check_counts(const CaseSpec& spec, const PointCounts& counts);

}  // namespace gradix
