#pragma once

// Helpers shared by the unit and acceptance tests: random parameter sets,
// exact Gaussian samples, and a brute-force conditioning oracle that is built
// from the structural equations rather than from assemble_sigma.

#include "ppls/model.hpp"
#include "ppls/numerics.hpp"

#include <algorithm>
#include <cstdint>
#include <random>

namespace ppls::testing {

inline Matrix random_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = z(rng);
  return m;
}

inline Matrix random_orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  return gram_schmidt_orthonormalize(random_normal(rows, cols, rng));
}

/// A valid, canonically ordered theta with well separated component strengths.
inline Theta random_theta(Eigen::Index p, Eigen::Index q, Eigen::Index r, std::mt19937_64& rng,
                          double noise_scale = 0.3) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Theta t;
  t.x_loadings = random_orthonormal(p, r, rng);
  t.y_loadings = random_orthonormal(q, r, rng);
  t.inner_slopes.resize(r);
  t.score_variances.resize(r);
  double strength = 4.0 + 2.0 * unif(rng);
  for (Eigen::Index k = 0; k < r; ++k) {
    t.inner_slopes(k) = 0.5 + unif(rng);
    t.score_variances(k) = strength / t.inner_slopes(k);
    strength *= 0.4 + 0.3 * unif(rng);
  }
  t.x_noise_var = noise_scale * (0.5 + unif(rng));
  t.y_noise_var = noise_scale * (0.5 + unif(rng));
  t.inner_noise_var = noise_scale * (0.5 + unif(rng));
  Matrix w = t.x_loadings;
  const Vector signs = normalize_column_signs(w);
  t.x_loadings = w;
  t.y_loadings = t.y_loadings * signs.asDiagonal();
  return t;
}

/// Linear map from independent sources (t, h, e, f) to (x, y, t, u), and the
/// source variances. cov(x, y, t, u) = A diag(d) A^T.
struct StructuralMap {
  Matrix a;
  Vector d;
};

inline StructuralMap structural_map(const Theta& th) {
  const Eigen::Index p = th.p(), q = th.q(), r = th.r();
  const Eigen::Index out = p + q + 2 * r;
  const Eigen::Index in = 2 * r + p + q;
  StructuralMap m;
  m.a = Matrix::Zero(out, in);
  m.d.resize(in);
  const Matrix b = th.inner_slopes.asDiagonal();
  // sources: [t (r), h (r), e (p), f (q)]
  // x = W t + e
  m.a.block(0, 0, p, r) = th.x_loadings;
  m.a.block(0, 2 * r, p, p) = Matrix::Identity(p, p);
  // y = C (B t + h) + f
  m.a.block(p, 0, q, r) = th.y_loadings * b;
  m.a.block(p, r, q, r) = th.y_loadings;
  m.a.block(p, 2 * r + p, q, q) = Matrix::Identity(q, q);
  // t
  m.a.block(p + q, 0, r, r) = Matrix::Identity(r, r);
  // u = B t + h
  m.a.block(p + q + r, 0, r, r) = b;
  m.a.block(p + q + r, r, r, r) = Matrix::Identity(r, r);
  m.d << th.score_variances, Vector::Constant(r, th.inner_noise_var),
      Vector::Constant(p, th.x_noise_var), Vector::Constant(q, th.y_noise_var);
  return m;
}

/// cov(x, y, t, u), (p + q + 2 r) square.
inline Matrix full_joint_covariance(const Theta& th) {
  const StructuralMap m = structural_map(th);
  return m.a * m.d.asDiagonal() * m.a.transpose();
}

/// Exact Gaussian draws of (x, y) rows, centered afterwards.
inline DataPair sample_gaussian(const Theta& th, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const StructuralMap m = structural_map(th);
  const Matrix z = random_normal(n, m.d.size(), rng) * m.d.cwiseSqrt().asDiagonal();
  const Matrix obs = z * m.a.topRows(th.p() + th.q()).transpose();
  DataPair d;
  d.x = obs.leftCols(th.p());
  d.y = obs.rightCols(th.q());
  return center(d);
}

/// Conditional moments of (t, u) given each row, by explicit partitioned
/// inversion with a full-pivot LU (deliberately a different route from the
/// library's Cholesky).
struct OracleMoments {
  Matrix mu_t, mu_u;
  Matrix cov_tt, cov_uu, cov_ut;
};

inline OracleMoments conditioning_oracle(const DataPair& data, const Theta& th) {
  const Eigen::Index p = th.p(), q = th.q(), r = th.r();
  const Matrix full = full_joint_covariance(th);
  const Eigen::Index o = p + q;
  const Matrix s_oo = full.topLeftCorner(o, o);
  const Matrix s_lo = full.bottomLeftCorner(2 * r, o);
  const Matrix s_ll = full.bottomRightCorner(2 * r, 2 * r);
  const Matrix inv = s_oo.fullPivLu().inverse();
  const Matrix gain = s_lo * inv;  // 2r x o
  Matrix z(data.n(), o);
  z << data.x, data.y;
  const Matrix mean = z * gain.transpose();
  const Matrix cov = s_ll - gain * s_lo.transpose();
  OracleMoments out;
  out.mu_t = mean.leftCols(r);
  out.mu_u = mean.rightCols(r);
  out.cov_tt = cov.topLeftCorner(r, r);
  out.cov_uu = cov.bottomRightCorner(r, r);
  out.cov_ut = cov.bottomLeftCorner(r, r);
  return out;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
  const double scale = std::max(b.norm(), 1e-300);
  return (a - b).norm() / scale;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace ppls::testing
