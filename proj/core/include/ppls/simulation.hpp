#pragma once

#include "ppls/alignment.hpp"
#include "ppls/em.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ppls {

enum class LatentDistribution { Normal, StudentT2, Poisson1, Binomial };

std::string to_string(LatentDistribution d);
LatentDistribution latent_distribution_from_string(const std::string& name);

/// How the bump centre of loading column k moves. `Component` shifts by the
/// component index; `Entry` shifts by the row index, which collapses every
/// column onto the same shape and is kept only for sensitivity checks.
enum class LoadingShift { Component, Entry };

enum class Estimator { Ppls, Pls };

std::string to_string(Estimator e);
Estimator estimator_from_string(const std::string& name);

struct ScenarioConfig {
  Eigen::Index n = 500;
  Eigen::Index p = 20;
  Eigen::Index q = 20;
  Eigen::Index r = 3;
  double noise_level = 0.1;  // alpha_n
  LatentDistribution distribution = LatentDistribution::Normal;
  int replicates = 200;
  std::uint64_t base_seed = 1;
  std::vector<Estimator> estimators{Estimator::Ppls, Estimator::Pls};
  LoadingShift loading_shift = LoadingShift::Component;
  FitConfig fit;
  int threads = 0;
  double max_failed_fraction = 0.05;
  bool keep_replicates = false;  // retain every aligned estimate in the result
};

/// Throws Error(InvalidArgument) when the config violates its invariants.
void validate_config(const ScenarioConfig& config);

struct TrueModel {
  Theta theta;
  LatentDistribution distribution = LatentDistribution::Normal;
};

struct Loadings {
  Matrix w;
  Matrix c;
};

/// Bell-shaped columns from the normal density, then Gram-Schmidt.
Loadings generate_loadings(Eigen::Index p, Eigen::Index q, Eigen::Index r,
                           LoadingShift shift = LoadingShift::Component);

TrueModel make_true_model(const ScenarioConfig& config);

struct GeneratedData {
  DataPair data;
  Matrix t, u, e, f, h;
};

/// Draws t, h, e, f (in that order) from the model's family, standardizes
/// each column empirically, rescales to the model variances, and assembles
/// u = t B + h, X = t W^T + e, Y = u C^T + f.
GeneratedData generate_data(const TrueModel& model, Eigen::Index n, std::uint64_t seed);

/// Entrywise summary of aligned loading estimates.
struct LoadingSummary {
  Matrix bias_w, bias_c;          // mean(estimate) - truth
  Matrix variance_w, variance_c;  // sample variance, N - 1 denominator
};

/// Relative bias mean(est)/truth - 1 and relative variance var(est)/truth^2
/// of one scalar parameter.
struct RelativeSummary {
  std::string name;
  double truth = 0.0;
  double relative_bias = 0.0;
  std::optional<double> relative_variance;  // empty with a single replicate
};

struct EstimatorResult {
  Estimator estimator = Estimator::Ppls;
  LoadingSummary loadings;
  bool has_variance = false;  // false with a single successful replicate
  double ordering_correct_proportion = 0.0;
  int successful = 0;
  int failed = 0;
  int not_converged = 0;      // PPLS fits stopped by the iteration cap
  std::vector<RelativeSummary> variance_parameters;  // PPLS only
  std::vector<Theta> replicates;  // aligned; filled when keep_replicates
};

struct ScenarioResult {
  ScenarioConfig config;
  TrueModel truth;
  std::vector<EstimatorResult> estimators;
};

/// Runs every replicate (seed base_seed + b), fits and aligns each estimator,
/// and reduces in replicate order. Throws Error(ScenarioFailed) when more
/// than max_failed_fraction of an estimator's fits throw.
ScenarioResult run_scenario(const ScenarioConfig& config);

}  // namespace ppls
