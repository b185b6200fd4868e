#pragma once

#include "ppls/numerics.hpp"

#include <string>
#include <vector>

namespace ppls {

/// Parameters of the PPLS model
///   x = t W^T + e,  y = u C^T + f,  u = t B + h
/// with t ~ N(0, diag(score_variances)), e ~ N(0, x_noise I_p),
/// f ~ N(0, y_noise I_q), h ~ N(0, inner_noise I_r).
struct Theta {
  Matrix x_loadings;          // W, p x r
  Matrix y_loadings;          // C, q x r
  Vector inner_slopes;        // diagonal of B, length r
  Vector score_variances;     // diagonal of Sigma_t, length r
  double x_noise_var = 0.0;   // sigma_e^2
  double y_noise_var = 0.0;   // sigma_f^2
  double inner_noise_var = 0.0;  // sigma_h^2

  Eigen::Index p() const { return x_loadings.rows(); }
  Eigen::Index q() const { return y_loadings.rows(); }
  Eigen::Index r() const { return x_loadings.cols(); }

  /// sigma_{t_k}^2 b_k, the quantity that fixes the component order.
  Vector component_strength() const {
    return score_variances.cwiseProduct(inner_slopes);
  }

  /// var(u) = B^2 Sigma_t + sigma_h^2 I, as a vector of diagonal entries.
  Vector inner_score_variances() const {
    return (inner_slopes.array().square() * score_variances.array() + inner_noise_var).matrix();
  }
};

/// Row-aligned samples. `centered` is measured by make_data_pair / center,
/// not asserted by the caller.
struct DataPair {
  Matrix x;  // N x p
  Matrix y;  // N x q
  bool centered = false;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return y.cols(); }
};

/// Validates shapes and finiteness, and records whether columns are centered.
DataPair make_data_pair(Matrix x, Matrix y);

/// Subtracts column means. With `unit_variance` each column is also divided
/// by its sample standard deviation (N - 1 denominator).
DataPair center(const DataPair& data, bool unit_variance = false);

/// Sufficient statistic of a centered sample: S = N^{-1} (X, Y)^T (X, Y).
struct SampleMoments {
  Matrix joint;  // (p + q) x (p + q)
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  Eigen::Index q = 0;
};

SampleMoments sample_moments(const DataPair& data);

struct CovarianceBlocks {
  Matrix sigma_x;   // p x p
  Matrix sigma_y;   // q x q
  Matrix sigma_xy;  // p x q
  Matrix cov_x_t;   // p x r
  Matrix cov_x_u;   // p x r
  Matrix cov_y_t;   // q x r
  Matrix cov_y_u;   // q x r

  /// [[sigma_x, sigma_xy], [sigma_xy^T, sigma_y]]
  Matrix joint() const;
  /// cov((x, y), t), (p + q) x r
  Matrix joint_cov_t() const;
  /// cov((x, y), u), (p + q) x r
  Matrix joint_cov_u() const;
};

struct ThetaViolation {
  std::string constraint;
  double discrepancy = 0.0;
};

struct ValidationTolerances {
  double orthonormality = 1e-8;
};

/// Every violated model constraint, each with a measured discrepancy. Empty
/// when theta is a valid, canonically ordered parameter set.
std::vector<ThetaViolation> validate_theta(const Theta& theta,
                                           const ValidationTolerances& tol = {});

/// Throws Error(InvalidArgument) listing the violations, if any.
void require_valid_theta(const Theta& theta);

/// Throws Error(DimensionMismatch) if the matrix and vector sizes disagree.
void require_consistent_dims(const Theta& theta);

CovarianceBlocks assemble_sigma(const Theta& theta);

/// Exact Gaussian log-likelihood of a centered sample, including the
/// -(N (p + q) / 2) ln(2 pi) constant.
double log_likelihood(const DataPair& data, const Theta& theta);
double log_likelihood(const SampleMoments& moments, const Theta& theta);

struct Canonicalized {
  Theta theta;
  Vector signs;                   // +-1 per output column
  std::vector<int> permutation;   // output column k came from input column permutation[k]
};

struct CanonicalizeOptions {
  double tie_relative = 1e-8;
};

/// Orders components by decreasing sigma_t^2 b and flips each (w_k, c_k) pair
/// so the largest-magnitude entry of w_k is positive.
Canonicalized canonicalize_theta(const Theta& theta, const CanonicalizeOptions& options = {});

struct VarianceExplained {
  double x_ratio = 0.0;
  double y_ratio = 0.0;
};

/// ||mu_T W^T||_F^2 / ||X||_F^2 and ||mu_U C^T||_F^2 / ||Y||_F^2.
VarianceExplained variance_explained(const DataPair& data, const Matrix& mu_t,
                                     const Matrix& mu_u, const Theta& theta);

/// tr(Sigma_xy) / tr(Sigma_y); requires p == q.
double overlap_fraction(const Theta& theta);

/// RV coefficient between two column-centered blocks with equal row counts.
double rv_coefficient(const Matrix& x, const Matrix& y);

/// Applies per-column signs and a column permutation to every component-
/// indexed parameter. permutation[k] names the source column of output k.
Theta permute_components(const Theta& theta, const std::vector<int>& permutation,
                         const Vector& signs);

}  // namespace ppls
