#include "ppls/model.hpp"

#include "ppls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>

namespace ppls {

namespace {

bool columns_centered(const Matrix& m) {
  const Eigen::Index n = m.rows();
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double mean = m.col(j).mean();
    const double sd = n > 1 ? std::sqrt((m.col(j).array() - mean).square().sum() / (n - 1)) : 0.0;
    // A constant column is centered only if it is zero.
    const double scale = sd > 0.0 ? sd : 1.0;
    if (std::abs(mean) > 1e-10 * scale) return false;
  }
  return true;
}

}  // namespace

DataPair make_data_pair(Matrix x, Matrix y) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "X has " + std::to_string(x.rows()) +
                                                  " rows but Y has " + std::to_string(y.rows()));
  }
  if (x.rows() < 2) {
    throw Error(ErrorCode::DimensionMismatch, "need at least two rows");
  }
  if (x.cols() < 1 || y.cols() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "X and Y need at least one column each");
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "data contain non-finite entries");
  }
  DataPair out{std::move(x), std::move(y), false};
  out.centered = columns_centered(out.x) && columns_centered(out.y);
  return out;
}

DataPair center(const DataPair& data, bool unit_variance) {
  auto process = [&](const Matrix& m) {
    Matrix c = m.rowwise() - m.colwise().mean();
    if (unit_variance) {
      for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double sd = std::sqrt(c.col(j).squaredNorm() / static_cast<double>(c.rows() - 1));
        if (sd > 0.0) c.col(j) /= sd;
      }
    }
    return c;
  };
  DataPair out{process(data.x), process(data.y), true};
  return out;
}

SampleMoments sample_moments(const DataPair& data) {
  if (!data.centered) {
    throw Error(ErrorCode::InvalidArgument, "sample moments need column-centered data");
  }
  const Eigen::Index p = data.p();
  const Eigen::Index q = data.q();
  const double n = static_cast<double>(data.n());
  SampleMoments out;
  out.n = data.n();
  out.p = p;
  out.q = q;
  out.joint.resize(p + q, p + q);
  out.joint.topLeftCorner(p, p).noalias() = data.x.transpose() * data.x / n;
  out.joint.bottomRightCorner(q, q).noalias() = data.y.transpose() * data.y / n;
  out.joint.topRightCorner(p, q).noalias() = data.x.transpose() * data.y / n;
  out.joint.bottomLeftCorner(q, p) = out.joint.topRightCorner(p, q).transpose();
  return out;
}

Matrix CovarianceBlocks::joint() const {
  const Eigen::Index p = sigma_x.rows();
  const Eigen::Index q = sigma_y.rows();
  Matrix out(p + q, p + q);
  out.topLeftCorner(p, p) = sigma_x;
  out.bottomRightCorner(q, q) = sigma_y;
  out.topRightCorner(p, q) = sigma_xy;
  out.bottomLeftCorner(q, p) = sigma_xy.transpose();
  return out;
}

Matrix CovarianceBlocks::joint_cov_t() const {
  Matrix out(cov_x_t.rows() + cov_y_t.rows(), cov_x_t.cols());
  out << cov_x_t, cov_y_t;
  return out;
}

Matrix CovarianceBlocks::joint_cov_u() const {
  Matrix out(cov_x_u.rows() + cov_y_u.rows(), cov_x_u.cols());
  out << cov_x_u, cov_y_u;
  return out;
}

void require_consistent_dims(const Theta& theta) {
  const Eigen::Index r = theta.r();
  if (r < 1 || theta.y_loadings.cols() != r || theta.inner_slopes.size() != r ||
      theta.score_variances.size() != r || theta.p() < 1 || theta.q() < 1) {
    throw Error(ErrorCode::DimensionMismatch, "theta has inconsistent component dimensions");
  }
}

std::vector<ThetaViolation> validate_theta(const Theta& theta, const ValidationTolerances& tol) {
  require_consistent_dims(theta);
  std::vector<ThetaViolation> out;
  const Eigen::Index p = theta.p();
  const Eigen::Index q = theta.q();
  const Eigen::Index r = theta.r();

  if (!(r < std::min(p, q))) {
    out.push_back({"0 < r < min(p, q)", static_cast<double>(r - std::min(p, q) + 1)});
  }
  const Matrix identity = Matrix::Identity(r, r);
  const double w_gap = (theta.x_loadings.transpose() * theta.x_loadings - identity).norm();
  if (!(w_gap <= tol.orthonormality)) out.push_back({"W^T W = I", w_gap});
  const double c_gap = (theta.y_loadings.transpose() * theta.y_loadings - identity).norm();
  if (!(c_gap <= tol.orthonormality)) out.push_back({"C^T C = I", c_gap});

  for (Eigen::Index k = 0; k < r; ++k) {
    if (!(theta.inner_slopes(k) > 0.0)) {
      out.push_back({"b_" + std::to_string(k + 1) + " > 0", theta.inner_slopes(k)});
    }
    if (!(theta.score_variances(k) > 0.0)) {
      out.push_back({"sigma_t" + std::to_string(k + 1) + "^2 > 0", theta.score_variances(k)});
    }
  }
  const Vector strength = theta.component_strength();
  for (Eigen::Index k = 0; k + 1 < r; ++k) {
    if (!(strength(k) > strength(k + 1))) {
      out.push_back({"sigma_t^2 b strictly decreasing at component " + std::to_string(k + 1),
                     strength(k + 1) - strength(k)});
    }
  }
  if (!(theta.x_noise_var > 0.0)) out.push_back({"sigma_e^2 > 0", theta.x_noise_var});
  if (!(theta.y_noise_var > 0.0)) out.push_back({"sigma_f^2 > 0", theta.y_noise_var});
  if (!(theta.inner_noise_var > 0.0)) out.push_back({"sigma_h^2 > 0", theta.inner_noise_var});
  return out;
}

void require_valid_theta(const Theta& theta) {
  const auto violations = validate_theta(theta);
  if (violations.empty()) return;
  std::ostringstream msg;
  msg << "invalid theta:";
  for (const auto& v : violations) msg << " [" << v.constraint << ", discrepancy " << v.discrepancy << "]";
  throw Error(ErrorCode::InvalidArgument, msg.str());
}

CovarianceBlocks assemble_sigma(const Theta& theta) {
  require_consistent_dims(theta);
  const Matrix& w = theta.x_loadings;
  const Matrix& c = theta.y_loadings;
  const auto st = theta.score_variances.asDiagonal();
  const Vector st_b = theta.score_variances.cwiseProduct(theta.inner_slopes);
  const Vector var_u = theta.inner_score_variances();

  CovarianceBlocks out;
  out.cov_x_t = w * st;
  out.cov_x_u = w * st_b.asDiagonal();
  out.cov_y_t = c * st_b.asDiagonal();
  out.cov_y_u = c * var_u.asDiagonal();

  // The observed blocks sum one term per component. Summing in an order fixed
  // by the component values (not their positions) makes the result bitwise
  // invariant under permutations; sign flips cancel exactly anyway.
  const Eigen::Index r = theta.r();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto key_less = [&](Eigen::Index a, Eigen::Index b) {
    if (theta.score_variances(a) != theta.score_variances(b))
      return theta.score_variances(a) < theta.score_variances(b);
    if (theta.inner_slopes(a) != theta.inner_slopes(b))
      return theta.inner_slopes(a) < theta.inner_slopes(b);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      if (std::abs(w(i, a)) != std::abs(w(i, b))) return std::abs(w(i, a)) < std::abs(w(i, b));
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      if (std::abs(c(i, a)) != std::abs(c(i, b))) return std::abs(c(i, a)) < std::abs(c(i, b));
    return false;
  };
  std::stable_sort(order.begin(), order.end(), key_less);
  Matrix ws(w.rows(), r), cs(c.rows(), r), xt(w.rows(), r), xu(w.rows(), r), yu(c.rows(), r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const Eigen::Index src = order[static_cast<std::size_t>(k)];
    ws.col(k) = w.col(src);
    cs.col(k) = c.col(src);
    xt.col(k) = out.cov_x_t.col(src);
    xu.col(k) = out.cov_x_u.col(src);
    yu.col(k) = out.cov_y_u.col(src);
  }
  out.sigma_x = xt * ws.transpose();
  out.sigma_x.diagonal().array() += theta.x_noise_var;
  out.sigma_y = yu * cs.transpose();
  out.sigma_y.diagonal().array() += theta.y_noise_var;
  out.sigma_xy = xu * cs.transpose();
  return out;
}

double log_likelihood(const SampleMoments& moments, const Theta& theta) {
  if (moments.p != theta.p() || moments.q != theta.q()) {
    throw Error(ErrorCode::DimensionMismatch, "data and theta dimensions differ");
  }
  const SpdFactor sigma(assemble_sigma(theta).joint());
  const double n = static_cast<double>(moments.n);
  const double d = static_cast<double>(moments.p + moments.q);
  const double trace = sigma.solve(moments.joint).trace();
  return -0.5 * n * d * std::log(2.0 * std::numbers::pi) - 0.5 * n * sigma.log_det() -
         0.5 * n * trace;
}

double log_likelihood(const DataPair& data, const Theta& theta) {
  return log_likelihood(sample_moments(data), theta);
}

Theta permute_components(const Theta& theta, const std::vector<int>& permutation,
                         const Vector& signs) {
  const Eigen::Index r = theta.r();
  if (static_cast<Eigen::Index>(permutation.size()) != r || signs.size() != r) {
    throw Error(ErrorCode::DimensionMismatch, "permutation length differs from r");
  }
  Theta out = theta;
  for (Eigen::Index k = 0; k < r; ++k) {
    const int src = permutation[static_cast<std::size_t>(k)];
    out.x_loadings.col(k) = signs(k) * theta.x_loadings.col(src);
    out.y_loadings.col(k) = signs(k) * theta.y_loadings.col(src);
    out.inner_slopes(k) = theta.inner_slopes(src);
    out.score_variances(k) = theta.score_variances(src);
  }
  return out;
}

Canonicalized canonicalize_theta(const Theta& theta, const CanonicalizeOptions& options) {
  require_consistent_dims(theta);
  const Eigen::Index r = theta.r();
  const Vector strength = theta.component_strength();
  std::vector<int> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return strength(a) > strength(b); });
  for (Eigen::Index k = 0; k + 1 < r; ++k) {
    const double a = strength(order[static_cast<std::size_t>(k)]);
    const double b = strength(order[static_cast<std::size_t>(k + 1)]);
    if (std::abs(a - b) <= options.tie_relative * std::max(std::abs(a), std::abs(b))) {
      throw Error(ErrorCode::NearDegenerateComponents,
                  "components " + std::to_string(order[static_cast<std::size_t>(k)] + 1) + " and " +
                      std::to_string(order[static_cast<std::size_t>(k + 1)] + 1) +
                      " have coinciding sigma_t^2 b");
    }
  }
  Canonicalized out;
  out.permutation = order;
  out.theta = permute_components(theta, order, Vector::Ones(r));
  out.signs = normalize_column_signs(out.theta.x_loadings);
  out.theta.y_loadings = out.theta.y_loadings * out.signs.asDiagonal();
  return out;
}

VarianceExplained variance_explained(const DataPair& data, const Matrix& mu_t, const Matrix& mu_u,
                                     const Theta& theta) {
  if (mu_t.rows() != data.n() || mu_u.rows() != data.n() || mu_t.cols() != theta.r() ||
      mu_u.cols() != theta.r() || data.p() != theta.p() || data.q() != theta.q()) {
    throw Error(ErrorCode::DimensionMismatch, "moments do not match data and theta");
  }
  VarianceExplained out;
  const double x_total = data.x.squaredNorm();
  const double y_total = data.y.squaredNorm();
  out.x_ratio = x_total > 0.0 ? (mu_t * theta.x_loadings.transpose()).squaredNorm() / x_total : 0.0;
  out.y_ratio = y_total > 0.0 ? (mu_u * theta.y_loadings.transpose()).squaredNorm() / y_total : 0.0;
  return out;
}

double overlap_fraction(const Theta& theta) {
  if (theta.p() != theta.q()) {
    throw Error(ErrorCode::NonSquareCrossBlock,
                "overlap needs p == q, got p = " + std::to_string(theta.p()) +
                    ", q = " + std::to_string(theta.q()));
  }
  const CovarianceBlocks blocks = assemble_sigma(theta);
  return blocks.sigma_xy.trace() / blocks.sigma_y.trace();
}

double rv_coefficient(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "RV coefficient needs equal row counts");
  }
  if (x.squaredNorm() == 0.0 || y.squaredNorm() == 0.0) {
    throw Error(ErrorCode::ZeroVariance, "RV coefficient of an all-zero block");
  }
  double cross = 0.0;
  double xx = 0.0;
  double yy = 0.0;
  if (x.rows() < std::max(x.cols(), y.cols())) {
    // Work with N x N Gram matrices: tr((X^T X)^2) = tr((X X^T)^2) etc.
    const Matrix gx = x * x.transpose();
    const Matrix gy = y * y.transpose();
    cross = gx.cwiseProduct(gy).sum();
    xx = gx.squaredNorm();
    yy = gy.squaredNorm();
  } else {
    cross = (x.transpose() * y).squaredNorm();
    xx = (x.transpose() * x).squaredNorm();
    yy = (y.transpose() * y).squaredNorm();
  }
  return cross / std::sqrt(xx * yy);
}

}  // namespace ppls
