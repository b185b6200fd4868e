#include "ppls/numerics.hpp"

#include "ppls/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace ppls {

bool is_symmetric(const Matrix& m, double relative_tolerance) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= relative_tolerance * scale;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix gram_schmidt_orthonormalize(const Matrix& a, const NumericTolerances& tol) {
  const Eigen::Index n = a.rows();
  const Eigen::Index k = a.cols();
  if (k == 0 || k > n) {
    throw Error(ErrorCode::DimensionMismatch,
                "Gram-Schmidt needs 1 <= columns <= rows, got " + std::to_string(n) + "x" +
                    std::to_string(k));
  }
  Matrix q = a;
  for (Eigen::Index j = 0; j < k; ++j) {
    // Two MGS sweeps: the second removes what rounding left behind.
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
    }
    const double norm = q.col(j).norm();
    if (!(norm > tol.degenerate_column)) {
      throw Error(ErrorCode::DegenerateColumns,
                  "column " + std::to_string(j) + " has projected norm " + std::to_string(norm));
    }
    q.col(j) /= norm;
  }
  return q;
}

SpdFactor::SpdFactor(const Matrix& m, const NumericTolerances& tol) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "Cholesky needs a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw Error(ErrorCode::NotPositiveDefinite, "matrix has non-finite entries");
  }
  if (!is_symmetric(m, tol.symmetry_relative)) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not symmetric");
  }
  const double max_diag = m.diagonal().maxCoeff();
  if (!(max_diag > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "non-positive diagonal");
  }
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::NotPositiveDefinite, "Cholesky factorization failed");
  }
  lower_ = llt.matrixL();
  const double threshold = tol.pivot_relative * max_diag;
  for (Eigen::Index i = 0; i < lower_.rows(); ++i) {
    const double pivot = lower_(i, i) * lower_(i, i);
    if (!(pivot > threshold) || !std::isfinite(pivot)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "pivot " + std::to_string(i) + " = " + std::to_string(pivot) +
                      " below threshold");
    }
  }
}

Matrix SpdFactor::solve(const Matrix& b) const {
  if (b.rows() != lower_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side row count does not match");
  }
  Matrix x = lower_.triangularView<Eigen::Lower>().solve(b);
  lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

double SpdFactor::log_det() const { return 2.0 * lower_.diagonal().array().log().sum(); }

Matrix cholesky_lower(const Matrix& m, const NumericTolerances& tol) {
  return SpdFactor(m, tol).lower();
}

Matrix solve_spd(const Matrix& m, const Matrix& b, const NumericTolerances& tol) {
  return SpdFactor(m, tol).solve(b);
}

Vector normalize_column_signs(Matrix& columns) {
  Vector signs = Vector::Ones(columns.cols());
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Eigen::Index arg = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double v = std::abs(columns(i, j));
      if (v > best) {  // strict: ties keep the lowest index
        best = v;
        arg = i;
      }
    }
    if (columns(arg, j) < 0.0) {
      columns.col(j) *= -1.0;
      signs(j) = -1.0;
    }
  }
  return signs;
}

SymEigen sym_eig(const Matrix& m, const NumericTolerances& tol) {
  if (!is_symmetric(m, tol.symmetry_relative)) {
    throw Error(ErrorCode::InvalidArgument, "sym_eig needs a symmetric matrix");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "symmetric eigensolver did not converge");
  }
  const Eigen::Index n = m.rows();
  // Eigen returns ascending eigenvalues; reverse for descending order.
  SymEigen out{Vector(n), Matrix(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  normalize_column_signs(out.vectors);
  return out;
}

ThinSvd thin_svd(const Matrix& a, Eigen::Index k) {
  if (k < 1 || k > std::min(a.rows(), a.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "requested " + std::to_string(k) +
                                                  " singular triplets of a " +
                                                  std::to_string(a.rows()) + "x" +
                                                  std::to_string(a.cols()) + " matrix");
  }
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU().leftCols(k), svd.singularValues().head(k),
              svd.matrixV().leftCols(k)};
  const Vector signs = normalize_column_signs(out.left);
  out.right = out.right * signs.asDiagonal();
  return out;
}

Matrix inverse_sqrt_spd(const Matrix& m, const NumericTolerances& tol) {
  const SymEigen eig = sym_eig(m, tol);
  const double max_value = eig.values.size() ? eig.values(0) : 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (!(eig.values(i) > tol.pivot_relative * max_value) || !(max_value > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite,
                  "eigenvalue " + std::to_string(i) + " = " + std::to_string(eig.values(i)));
    }
  }
  const Vector inv_sqrt = eig.values.array().rsqrt();
  return eig.vectors * inv_sqrt.asDiagonal() * eig.vectors.transpose();
}

}  // namespace ppls
