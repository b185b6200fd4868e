#pragma once

#include <Eigen/Dense>

#include <cstddef>

namespace ppls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thresholds used by the dense kernels below. The defaults are what every
/// other module uses; tests override them to probe the failure paths.
struct NumericTolerances {
  double degenerate_column = 1e-12;   // projected column norm in Gram-Schmidt
  double pivot_relative = 1e-12;      // Cholesky pivot relative to max diagonal
  double symmetry_relative = 1e-10;   // accepted asymmetry of "symmetric" input
};

inline constexpr NumericTolerances kDefaultTolerances{};

/// Modified Gram-Schmidt with one reorthogonalization pass. Columns are
/// processed left to right, so span(Q[:, 0..k]) == span(A[:, 0..k]) for every k.
/// Throws Error(DegenerateColumns) when a projected column is numerically zero.
Matrix gram_schmidt_orthonormalize(const Matrix& a,
                                   const NumericTolerances& tol = kDefaultTolerances);

/// Lower Cholesky factor L with L L^T = M and a strictly positive diagonal.
Matrix cholesky_lower(const Matrix& m, const NumericTolerances& tol = kDefaultTolerances);

struct SymEigen {
  Vector values;   // descending
  Matrix vectors;  // orthonormal columns, matched to `values`
};

/// Eigen-decomposition of a symmetric matrix. Eigenvalues descend; each
/// eigenvector is signed so its largest-magnitude entry is positive (ties go
/// to the lowest index).
SymEigen sym_eig(const Matrix& m, const NumericTolerances& tol = kDefaultTolerances);

/// Solves M X = B for symmetric positive-definite M through its Cholesky factor.
Matrix solve_spd(const Matrix& m, const Matrix& b,
                 const NumericTolerances& tol = kDefaultTolerances);

/// Cholesky factorization kept around for repeated solves and log-determinants.
class SpdFactor {
 public:
  explicit SpdFactor(const Matrix& m, const NumericTolerances& tol = kDefaultTolerances);

  Matrix solve(const Matrix& b) const;
  double log_det() const;
  const Matrix& lower() const { return lower_; }
  Eigen::Index size() const { return lower_.rows(); }

 private:
  Matrix lower_;
};

struct ThinSvd {
  Matrix left;     // n x k
  Vector values;   // descending, length k
  Matrix right;    // m x k
};

/// Leading `k` singular triplets of `a`. Signs follow the sym_eig convention
/// applied to the left vectors; right vectors flip along with them.
ThinSvd thin_svd(const Matrix& a, Eigen::Index k);

/// Flips the sign of each column so that its largest-magnitude entry is
/// positive (lowest index on ties). Returns the applied signs.
Vector normalize_column_signs(Matrix& columns);

/// Symmetric inverse square root M^{-1/2} of an SPD matrix via sym_eig.
Matrix inverse_sqrt_spd(const Matrix& m, const NumericTolerances& tol = kDefaultTolerances);

bool is_symmetric(const Matrix& m, double relative_tolerance);

bool all_finite(const Matrix& m);

}  // namespace ppls
