#pragma once

#include "ppls/model.hpp"

#include <string>

namespace ppls {

enum class PlsAlgorithm { Svd, Nipals };

std::string to_string(PlsAlgorithm algorithm);
PlsAlgorithm pls_algorithm_from_string(const std::string& name);

/// Two-block PLS (PLS-SVD): W and C are the leading singular vectors of X^T Y.
struct PlsFit {
  Matrix x_weights;  // W, p x r, orthonormal
  Matrix y_weights;  // C, q x r, orthonormal
  Matrix x_scores;   // X W
  Matrix y_scores;   // Y C
  Vector covariances;  // singular values of X^T Y / N
};

struct PlsOptions {
  PlsAlgorithm algorithm = PlsAlgorithm::Svd;
  int max_iter = 10000;      // per component, power iteration only
  double tolerance = 1e-10;  // change in the x-weight vector
};

/// Requires centered data and 0 < r < min(N, p, q). Columns follow the
/// descending singular values; each (w_k, c_k) pair is signed so that the
/// largest-magnitude entry of w_k is positive.
PlsFit fit_pls(const DataPair& data, Eigen::Index r, const PlsOptions& options = {});

}  // namespace ppls
