#pragma once

#include "ppls/model.hpp"

#include <vector>

namespace ppls {

/// Column correspondence between an estimate and a reference loading matrix.
struct LoadingMatch {
  std::vector<int> permutation;  // reference column k <- estimate column permutation[k]
  Vector signs;                  // applied after permuting
  bool ordering_correct = false; // permutation is the identity
};

/// Greedy matching: reference columns are visited in order, each taking the
/// unmatched estimate column with the largest |inner product|; a negative
/// inner product flips the matched column.
LoadingMatch match_loadings(const Matrix& estimate, const Matrix& reference);

/// Applies `match` to a loading matrix.
Matrix apply_match(const Matrix& loadings, const LoadingMatch& match);

struct AlignedTheta {
  Theta theta;
  LoadingMatch match;
};

/// Matches on the x-loadings and carries the same permutation and signs to
/// the y-loadings, slopes and score variances.
AlignedTheta align_estimates(const Theta& estimate, const Theta& reference);

}  // namespace ppls
