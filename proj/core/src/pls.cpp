#include "ppls/pls.hpp"

#include "ppls/error.hpp"

#include <algorithm>
#include <cmath>

namespace ppls {

std::string to_string(PlsAlgorithm algorithm) {
  return algorithm == PlsAlgorithm::Svd ? "svd" : "nipals";
}

PlsAlgorithm pls_algorithm_from_string(const std::string& name) {
  if (name == "svd") return PlsAlgorithm::Svd;
  if (name == "nipals") return PlsAlgorithm::Nipals;
  throw Error(ErrorCode::InvalidArgument, "unknown PLS algorithm '" + name + "'");
}

namespace {

// Leading singular pairs of M = X^T Y by power iteration on M M^T, deflating
// M by projecting out the weights already found on both sides.
void power_pairs(Matrix m, Eigen::Index r, const PlsOptions& options, Matrix& w, Matrix& c,
                 Vector& values) {
  const Eigen::Index p = m.rows();
  const Eigen::Index q = m.cols();
  w.resize(p, r);
  c.resize(q, r);
  values.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    // Start from the column of M with the largest norm.
    Eigen::Index start = 0;
    m.colwise().norm().maxCoeff(&start);
    Vector wk = m.col(start);
    if (wk.norm() == 0.0) {
      throw Error(ErrorCode::RankDeficient,
                  "cross-product matrix has rank below " + std::to_string(r));
    }
    wk.normalize();
    for (int it = 0; it < options.max_iter; ++it) {
      Vector next = m * (m.transpose() * wk);
      const double norm = next.norm();
      if (norm == 0.0) break;
      next /= norm;
      if (next.dot(wk) < 0.0) next = -next;
      const double change = (next - wk).norm();
      wk = next;
      if (change < options.tolerance) break;
    }
    Vector ck = m.transpose() * wk;
    values(k) = ck.norm();
    ck /= values(k);
    w.col(k) = wk;
    c.col(k) = ck;
    m -= wk * (wk.transpose() * m);
    m -= (m * ck) * ck.transpose();
  }
}

}  // namespace

PlsFit fit_pls(const DataPair& data, Eigen::Index r, const PlsOptions& options) {
  if (!data.centered) {
    throw Error(ErrorCode::InvalidArgument, "PLS requires column-centered data");
  }
  if (!(r > 0 && r < std::min({data.n(), data.p(), data.q()}))) {
    throw Error(ErrorCode::DimensionMismatch, "need 0 < r < min(N, p, q); got r = " +
                                                  std::to_string(r));
  }
  const double n = static_cast<double>(data.n());
  const Matrix cross = data.x.transpose() * data.y / n;

  PlsFit fit;
  if (options.algorithm == PlsAlgorithm::Svd) {
    const Eigen::Index k_all = std::min(cross.rows(), cross.cols());
    const ThinSvd svd = thin_svd(cross, k_all);
    const double top = svd.values(0);
    Eigen::Index rank = 0;
    while (rank < k_all && svd.values(rank) > 1e-10 * top) ++rank;
    if (top <= 0.0 || rank < r) {
      throw Error(ErrorCode::RankDeficient, "X^T Y has numerical rank " + std::to_string(rank) +
                                                ", fewer than " + std::to_string(r) +
                                                " components requested");
    }
    fit.x_weights = svd.left.leftCols(r);
    fit.y_weights = svd.right.leftCols(r);
    fit.covariances = svd.values.head(r);
  } else {
    power_pairs(cross, r, options, fit.x_weights, fit.y_weights, fit.covariances);
    if (fit.covariances(r - 1) <= 1e-10 * fit.covariances(0)) {
      throw Error(ErrorCode::RankDeficient,
                  "X^T Y has fewer than " + std::to_string(r) + " non-negligible singular values");
    }
  }
  const Vector signs = normalize_column_signs(fit.x_weights);
  fit.y_weights = fit.y_weights * signs.asDiagonal();
  fit.x_scores = data.x * fit.x_weights;
  fit.y_scores = data.y * fit.y_weights;
  return fit;
}

}  // namespace ppls
