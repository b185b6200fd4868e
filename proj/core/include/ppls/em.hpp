#pragma once

#include "ppls/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ppls {

/// Conditional moments of the latent scores given the observed sample.
struct EStepMoments {
  Matrix mu_t;   // E(T | X, Y), N x r
  Matrix mu_u;   // E(U | X, Y), N x r
  Matrix ctt;    // E(T^T T | X, Y), r x r
  Matrix cuu;    // E(U^T U | X, Y), r x r
  Matrix cut;    // E(U^T T | X, Y), r x r
  double exp_ee = 0.0;  // tr E(E^T E | X, Y) under the current loadings
  double exp_ff = 0.0;  // tr E(F^T F | X, Y)
  double exp_hh = 0.0;  // tr E(H^T H | X, Y)
};

enum class Orthogonalization {
  /// L_W = lower Cholesky factor of mu_T^T X X^T mu_T (Gram-Schmidt of X^T mu_T).
  CholeskyLower,
  /// L_W = V diag(sqrt(lambda)) V^T from the eigenvectors of mu_T^T X X^T mu_T.
  Eigenvectors,
};

std::string to_string(Orthogonalization o);
Orthogonalization orthogonalization_from_string(const std::string& name);

struct FitConfig {
  int max_iter = 10000;
  double tol_loglik = 1e-6;  // absolute log-likelihood increment
  Orthogonalization orthogonalization = Orthogonalization::Eigenvectors;
  std::uint64_t seed = 0;    // 0: unperturbed SVD start
};

struct FitResult {
  Theta theta;                       // canonical
  std::vector<double> loglik_trace;  // entry 0 is the starting value
  bool converged = false;
  int iterations = 0;
  EStepMoments final_moments;
  std::vector<std::string> warnings;
};

/// Per-row Gaussian posterior of the latent scores: every row shares the
/// same conditional covariance, only the means differ.
struct LatentPosterior {
  Matrix mu_t;    // N x r
  Matrix mu_u;    // N x r
  Matrix cov_tt;  // var(t | x, y), r x r
  Matrix cov_uu;  // var(u | x, y)
  Matrix cov_ut;  // cov(u, t | x, y)
};

LatentPosterior latent_posterior(const DataPair& data, const Theta& theta);

/// Exact conditional moments via one Cholesky factorization of the joint
/// covariance; Sigma^{-1} is never formed.
EStepMoments e_step(const DataPair& data, const Theta& theta);

/// Constrained maximization of the expected complete-data log-likelihood.
/// The noise variances are evaluated at the updated loadings and slopes.
/// The result is not canonicalized.
Theta m_step(const DataPair& data, const EStepMoments& moments, const FitConfig& config);

/// Deterministic start from the SVD of X^T Y. A non-zero seed rotates the
/// loadings by a small random perturbation.
Theta initialize_theta(const DataPair& data, Eigen::Index r, std::uint64_t seed);

FitResult fit_ppls(const DataPair& data, Eigen::Index r, const FitConfig& config = {});

/// Same as fit_ppls but starting from a caller-supplied parameter set.
FitResult fit_ppls_from(const DataPair& data, const Theta& start, const FitConfig& config = {});

/// Q(theta') = E(ln f(X, Y, T, U) | X, Y, theta) evaluated from moments taken
/// under theta. Used to check that m_step maximizes the expected
/// complete-data log-likelihood.
double expected_complete_loglik(const DataPair& data, const EStepMoments& moments,
                                const Theta& candidate);

}  // namespace ppls
