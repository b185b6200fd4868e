#include "ppls/alignment.hpp"

#include "ppls/error.hpp"

#include <cmath>

namespace ppls {

LoadingMatch match_loadings(const Matrix& estimate, const Matrix& reference) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "estimate and reference loadings differ in shape");
  }
  const Eigen::Index r = reference.cols();
  const Matrix inner = reference.transpose() * estimate;  // (k, j) = <ref_k, est_j>
  std::vector<bool> used(static_cast<std::size_t>(r), false);
  LoadingMatch out;
  out.permutation.resize(static_cast<std::size_t>(r));
  out.signs = Vector::Ones(r);
  out.ordering_correct = true;
  for (Eigen::Index k = 0; k < r; ++k) {
    Eigen::Index best = -1;
    double best_value = -1.0;
    for (Eigen::Index j = 0; j < r; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double v = std::abs(inner(k, j));
      if (v > best_value) {
        best_value = v;
        best = j;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    out.permutation[static_cast<std::size_t>(k)] = static_cast<int>(best);
    if (inner(k, best) < 0.0) out.signs(k) = -1.0;
    if (best != k) out.ordering_correct = false;
  }
  return out;
}

Matrix apply_match(const Matrix& loadings, const LoadingMatch& match) {
  Matrix out(loadings.rows(), loadings.cols());
  for (Eigen::Index k = 0; k < loadings.cols(); ++k) {
    out.col(k) = match.signs(k) * loadings.col(match.permutation[static_cast<std::size_t>(k)]);
  }
  return out;
}

AlignedTheta align_estimates(const Theta& estimate, const Theta& reference) {
  AlignedTheta out;
  out.match = match_loadings(estimate.x_loadings, reference.x_loadings);
  if (estimate.q() != reference.q()) {
    throw Error(ErrorCode::DimensionMismatch, "estimate and reference y-loadings differ in shape");
  }
  out.theta = permute_components(estimate, out.match.permutation, out.match.signs);
  return out;
}

}  // namespace ppls
