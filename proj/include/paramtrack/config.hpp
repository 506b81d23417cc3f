#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "paramtrack/harness.hpp"
#include "paramtrack/hyperopt.hpp"
#include "paramtrack/pipeline.hpp"

namespace paramtrack {

/// Hyperparameter search request: space bounds, budget and the base run.
struct HyperoptSpec {
    SearchSpace space = SearchSpace::reservoir_default();
    int budget = 80;
    int n_seeds = 3;
    OptMode mode = OptMode::GpEi;
    RunConfig base;
};

// Parsers reject unknown keys and report the offending key path. Absent keys
// fall back to the stock defaults for the configured system/waveform.
RunConfig run_config_from_json(const nlohmann::json& j);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);
HyperoptSpec hyperopt_spec_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& config);

RunConfig load_run_config(const std::filesystem::path& path);
SweepSpec load_sweep_spec(const std::filesystem::path& path);
HyperoptSpec load_hyperopt_spec(const std::filesystem::path& path);

} // namespace paramtrack
