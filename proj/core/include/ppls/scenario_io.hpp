#pragma once

#include "ppls/simulation.hpp"

#include <filesystem>
#include <string>

namespace ppls {

inline constexpr int kScenarioSchemaVersion = 1;

/// Reads a scenario from JSON. Recognized keys (all optional):
///   n, p, q, r, noise_level, distribution ("normal" | "t2" | "poisson" |
///   "binomial"), replicates, base_seed, estimators (["ppls", "pls"]),
///   loading_shift ("component" | "entry"), threads, max_failed_fraction,
///   fit: {max_iter, tol_loglik, orthogonalization ("eigen" | "cholesky"), seed}.
/// Unknown keys are rejected so that typos do not silently fall back to defaults.
ScenarioConfig scenario_config_from_json(const std::string& text);
ScenarioConfig read_scenario_config(const std::filesystem::path& path);

/// Fully resolved config, every key present.
std::string scenario_config_to_json(const ScenarioConfig& config, int indent = 2);

/// Writes bias.csv, variance.csv and ordering.json into `dir`. The CSVs are
/// long format with columns estimator, matrix, row, component, statistic,
/// value; rows and components are 1-based. Variance values are "NA" when
/// only one replicate succeeded.
void write_scenario_outputs(const ScenarioResult& result, const std::filesystem::path& dir);

}  // namespace ppls
