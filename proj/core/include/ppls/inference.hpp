#pragma once

#include "ppls/em.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ppls {

enum class SeMethod { Asymptotic, Bootstrap };

std::string to_string(SeMethod method);

enum class InformationKind {
  /// Observed information of the whole parameter (W, C, B, Sigma_t and the
  /// three noise variances) on the orthonormal-loading manifold. Uses the
  /// exact likelihood, so it also covers C without a separate derivation.
  Constrained,
  /// asymptotic_se_w / asymptotic_se_c column by column.
  Column,
};

std::string to_string(InformationKind kind);
InformationKind information_kind_from_string(const std::string& name);

/// Louis-method result for one loading column.
struct ColumnInformation {
  Vector se;            // length p (or q)
  Matrix information;   // observed information E{B} - Cov{S}
  bool degenerate = false;  // information not positive definite; se from the pseudo-inverse
};

/// Observed information for w_k (0-based k) by the Louis identity applied to
/// the complete-data log-likelihood of X given T. Conditional moments of the
/// scores are evaluated per row and summed; the loading column is treated as
/// a free p-vector (orthogonality is not re-imposed).
ColumnInformation asymptotic_se_w(const DataPair& data, const Theta& theta, Eigen::Index k);

/// The same construction for c_k with (Y, U, C, sigma_f^2) in place of
/// (X, T, W, sigma_e^2). This mirrors the x-side derivation rather than
/// following an independent one.
ColumnInformation asymptotic_se_c(const DataPair& data, const Theta& theta, Eigen::Index k);

struct LoadingSE {
  Matrix se_w;  // p x r
  Matrix se_c;  // q x r
  SeMethod method = SeMethod::Asymptotic;
  int bootstrap_replicates = 0;     // replicates that entered the estimate
  int failed_replicates = 0;
  std::vector<bool> degenerate_w;   // per column, asymptotic only
  std::vector<bool> degenerate_c;
  InformationKind information = InformationKind::Constrained;
  bool c_by_symmetry = false;       // asymptotic C-side is the mirrored derivation
  bool degenerate = false;          // some information matrix was not positive definite
  std::vector<std::string> warnings;
};

/// Observed information in local coordinates around theta. The chart moves W
/// as polar(W + W K + W_perp A) with K skew-symmetric, C likewise, and the
/// remaining parameters additively. Second derivatives are central
/// differences of the exact log-likelihood.
struct ConstrainedInformation {
  Matrix information;      // negative Hessian in chart coordinates
  Matrix loading_jacobian; // d vec(W), d vec(C) by chart coordinates, (p r + q r) x dim
  Eigen::Index w_coords = 0;
  Eigen::Index c_coords = 0;
};

ConstrainedInformation constrained_information(const DataPair& data, const Theta& theta);

/// Standard errors of every loading entry.
LoadingSE asymptotic_loading_se(const DataPair& data, const Theta& theta,
                                InformationKind kind = InformationKind::Constrained);

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t base_seed = 1;
  int threads = 0;                    // 0: hardware concurrency
  double max_failed_fraction = 0.10;
};

/// Resamples rows jointly (replicate b uses seed base_seed + b), re-centers,
/// refits, aligns each fit to `reference`, and reports the entrywise standard
/// deviation of the aligned loadings. Non-converged fits are excluded.
LoadingSE bootstrap_se(const DataPair& data, const Theta& reference, const FitConfig& config,
                       const BootstrapOptions& options);

/// Fits the reference on `data` first, then bootstraps against it.
LoadingSE bootstrap_se(const DataPair& data, Eigen::Index r, const FitConfig& config,
                       const BootstrapOptions& options);

/// Row-resampled, re-centered copy of `data` for one bootstrap replicate.
DataPair bootstrap_resample(const DataPair& data, std::uint64_t seed);

}  // namespace ppls
