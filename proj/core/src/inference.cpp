#include "ppls/inference.hpp"

#include "ppls/alignment.hpp"
#include "ppls/error.hpp"
#include "ppls/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

namespace ppls {

std::string to_string(SeMethod method) {
  return method == SeMethod::Asymptotic ? "asymptotic" : "bootstrap";
}

namespace {

// Louis information for column k of `loadings` in the block model
//   data_i = loadings * s_i + noise,  noise ~ N(0, noise_var I),
// where s_i | observed ~ N(means.row(i), cov). The per-row complete-data
// score is a_i / noise_var with a_i = data_i s_ik - loadings s_i s_ik, and
// E{B} = sum_i E(s_ik^2) / noise_var I.
ColumnInformation louis_column(const Matrix& data, const Matrix& loadings, double noise_var,
                               const Matrix& means, const Matrix& cov, Eigen::Index k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  const Eigen::Index r = loadings.cols();
  const double v_kk = cov(k, k);
  const Vector v_k = cov.col(k);

  Vector second(n);          // E(s_ik^2)
  Matrix third(n, r);        // E(s_ik^2 s_i)
  Matrix cross(n, r);        // E(s_ik s_i)
  Matrix fourth = Matrix::Zero(r, r);  // sum_i E(s_ik^2 s_i s_i^T)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector m = means.row(i).transpose();
    const double mk = m(k);
    second(i) = mk * mk + v_kk;
    third.row(i) = ((mk * mk + v_kk) * m + 2.0 * mk * v_k).transpose();
    cross.row(i) = (mk * m + v_k).transpose();
    const Matrix mmt = m * m.transpose();
    fourth += mk * mk * (mmt + cov) + v_kk * mmt +
              2.0 * mk * (v_k * m.transpose() + m * v_k.transpose()) + v_kk * cov +
              2.0 * v_k * v_k.transpose();
  }

  // sum_i E(a_i a_i^T)
  const Matrix w_third = third * loadings.transpose();  // n x d, row i = (W E3_i)^T
  Matrix outer = data.transpose() * second.asDiagonal() * data;
  const Matrix mixed = data.transpose() * w_third;
  outer -= mixed + mixed.transpose();
  outer += loadings * fourth * loadings.transpose();
  // sum_i E(a_i) E(a_i)^T
  const Matrix mean_a = data.array().colwise() * means.col(k).array() -
                        (cross * loadings.transpose()).array();
  const Matrix score_cov = outer - mean_a.transpose() * mean_a;

  ColumnInformation out;
  out.information = Matrix::Identity(d, d) * (second.sum() / noise_var) -
                    score_cov / (noise_var * noise_var);
  out.information = 0.5 * (out.information + out.information.transpose());

  const SymEigen eig = sym_eig(out.information);
  const double top = eig.values(0);
  const double cutoff = 1e-12 * std::abs(top);
  Vector inv_values(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (eig.values(i) > cutoff && top > 0.0) {
      inv_values(i) = 1.0 / eig.values(i);
    } else {
      inv_values(i) = 0.0;
      out.degenerate = true;
    }
  }
  const Matrix covariance = eig.vectors * inv_values.asDiagonal() * eig.vectors.transpose();
  out.se = covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

void check_component(const Theta& theta, Eigen::Index k) {
  if (k < 0 || k >= theta.r()) {
    throw Error(ErrorCode::ComponentOutOfRange,
                "component " + std::to_string(k) + " outside [0, " + std::to_string(theta.r()) + ")");
  }
}

}  // namespace

ColumnInformation asymptotic_se_w(const DataPair& data, const Theta& theta, Eigen::Index k) {
  check_component(theta, k);
  const LatentPosterior post = latent_posterior(data, theta);
  return louis_column(data.x, theta.x_loadings, theta.x_noise_var, post.mu_t, post.cov_tt, k);
}

ColumnInformation asymptotic_se_c(const DataPair& data, const Theta& theta, Eigen::Index k) {
  check_component(theta, k);
  const LatentPosterior post = latent_posterior(data, theta);
  return louis_column(data.y, theta.y_loadings, theta.y_noise_var, post.mu_u, post.cov_uu, k);
}

std::string to_string(InformationKind kind) {
  return kind == InformationKind::Constrained ? "constrained" : "column";
}

InformationKind information_kind_from_string(const std::string& name) {
  if (name == "constrained") return InformationKind::Constrained;
  if (name == "column") return InformationKind::Column;
  throw Error(ErrorCode::InvalidArgument, "unknown information kind '" + name + "'");
}

namespace {

// Orthonormal basis of the complement of span(basis).
Matrix orthogonal_complement(const Matrix& basis) {
  Eigen::HouseholderQR<Matrix> qr(basis);
  const Matrix q = qr.householderQ() * Matrix::Identity(basis.rows(), basis.rows());
  return q.rightCols(basis.rows() - basis.cols());
}

struct StiefelChart {
  Matrix base;
  Matrix perp;

  Eigen::Index dim() const {
    const Eigen::Index r = base.cols();
    return (base.rows() - r) * r + r * (r - 1) / 2;
  }

  // Coordinates: A column-major ((d - r) x r), then the strict upper
  // triangle of K row by row.
  Matrix point(const double* v) const {
    const Eigen::Index r = base.cols();
    const Eigen::Index m = perp.cols();
    const Eigen::Map<const Matrix> a(v, m, r);
    Matrix k = Matrix::Zero(r, r);
    const double* kv = v + m * r;
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = i + 1; j < r; ++j) {
        k(i, j) = *kv;
        k(j, i) = -*kv;
        ++kv;
      }
    }
    const Matrix moved = base + base * k + perp * a;
    return moved * inverse_sqrt_spd(moved.transpose() * moved);
  }

  // Differential of point() at the origin (the polar retraction is first
  // order exact), as a (d r) x dim() matrix acting on column-major vec.
  Matrix jacobian() const {
    const Eigen::Index d = base.rows();
    const Eigen::Index r = base.cols();
    const Eigen::Index m = perp.cols();
    Matrix jac = Matrix::Zero(d * r, dim());
    Eigen::Index c = 0;
    for (Eigen::Index k = 0; k < r; ++k) {
      for (Eigen::Index j = 0; j < m; ++j, ++c) jac.block(k * d, c, d, 1) = perp.col(j);
    }
    for (Eigen::Index i = 0; i < r; ++i) {
      for (Eigen::Index j = i + 1; j < r; ++j, ++c) {
        jac.block(j * d, c, d, 1) = base.col(i);
        jac.block(i * d, c, d, 1) = -base.col(j);
      }
    }
    return jac;
  }
};

}  // namespace

ConstrainedInformation constrained_information(const DataPair& data, const Theta& theta) {
  require_consistent_dims(theta);
  const SampleMoments moments = sample_moments(data);
  const Eigen::Index r = theta.r();
  const StiefelChart w_chart{theta.x_loadings, orthogonal_complement(theta.x_loadings)};
  const StiefelChart c_chart{theta.y_loadings, orthogonal_complement(theta.y_loadings)};
  const Eigen::Index nw = w_chart.dim();
  const Eigen::Index nc = c_chart.dim();
  const Eigen::Index rest = nw + nc;
  const Eigen::Index dim = rest + 2 * r + 3;

  auto at = [&](const Vector& v) {
    Theta t = theta;
    t.x_loadings = w_chart.point(v.data());
    t.y_loadings = c_chart.point(v.data() + nw);
    t.inner_slopes += v.segment(rest, r);
    t.score_variances += v.segment(rest + r, r);
    t.x_noise_var += v(rest + 2 * r);
    t.y_noise_var += v(rest + 2 * r + 1);
    t.inner_noise_var += v(rest + 2 * r + 2);
    return t;
  };
  auto loglik = [&](const Vector& v) { return log_likelihood(moments, at(v)); };

  // Loading coordinates are on the unit scale; the others step relative to
  // their own magnitude so positivity is never at risk.
  constexpr double rel = 1e-4;
  Vector h = Vector::Constant(dim, rel);
  for (Eigen::Index k = 0; k < r; ++k) {
    h(rest + k) = rel * std::max(std::abs(theta.inner_slopes(k)), 1e-3);
    h(rest + r + k) = rel * theta.score_variances(k);
  }
  h(rest + 2 * r) = rel * theta.x_noise_var;
  h(rest + 2 * r + 1) = rel * theta.y_noise_var;
  h(rest + 2 * r + 2) = rel * theta.inner_noise_var;

  const Vector zero = Vector::Zero(dim);
  const double center = loglik(zero);
  Matrix hess(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Vector e = zero;
    e(i) = h(i);
    hess(i, i) = (loglik(e) - 2.0 * center + loglik(-e)) / (h(i) * h(i));
    for (Eigen::Index j = i + 1; j < dim; ++j) {
      Vector pp = zero;
      pp(i) = h(i);
      pp(j) = h(j);
      Vector pm = pp;
      pm(j) = -h(j);
      hess(i, j) = (loglik(pp) - loglik(pm) - loglik(-pm) + loglik(-pp)) / (4.0 * h(i) * h(j));
      hess(j, i) = hess(i, j);
    }
  }

  ConstrainedInformation out;
  out.information = -hess;
  out.w_coords = nw;
  out.c_coords = nc;
  const Eigen::Index pw = theta.p() * r;
  const Eigen::Index qc = theta.q() * r;
  out.loading_jacobian = Matrix::Zero(pw + qc, dim);
  out.loading_jacobian.block(0, 0, pw, nw) = w_chart.jacobian();
  out.loading_jacobian.block(pw, nw, qc, nc) = c_chart.jacobian();
  return out;
}

LoadingSE asymptotic_loading_se(const DataPair& data, const Theta& theta, InformationKind kind) {
  LoadingSE out;
  out.method = SeMethod::Asymptotic;
  out.information = kind;
  out.se_w.resize(theta.p(), theta.r());
  out.se_c.resize(theta.q(), theta.r());

  if (kind == InformationKind::Constrained) {
    const ConstrainedInformation info = constrained_information(data, theta);
    const SymEigen eig = sym_eig(info.information);
    const double top = eig.values(0);
    Vector inv(eig.values.size());
    for (Eigen::Index i = 0; i < inv.size(); ++i) {
      if (top > 0.0 && eig.values(i) > 1e-12 * top) {
        inv(i) = 1.0 / eig.values(i);
      } else {
        inv(i) = 0.0;
        out.degenerate = true;
      }
    }
    // Loading covariance J I^{-1} J^T; only its diagonal is needed.
    const Matrix half = info.loading_jacobian * eig.vectors * inv.cwiseSqrt().asDiagonal();
    const Vector var = half.rowwise().squaredNorm();
    const Eigen::Index pw = theta.p() * theta.r();
    out.se_w = Eigen::Map<const Matrix>(var.data(), theta.p(), theta.r()).cwiseSqrt();
    out.se_c = Eigen::Map<const Matrix>(var.data() + pw, theta.q(), theta.r()).cwiseSqrt();
    out.degenerate_w.assign(static_cast<std::size_t>(theta.r()), out.degenerate);
    out.degenerate_c.assign(static_cast<std::size_t>(theta.r()), out.degenerate);
    if (out.degenerate) {
      out.warnings.push_back("observed information is not positive definite; pseudo-inverse used");
    }
    return out;
  }

  const LatentPosterior post = latent_posterior(data, theta);
  out.c_by_symmetry = true;
  for (Eigen::Index k = 0; k < theta.r(); ++k) {
    const ColumnInformation w =
        louis_column(data.x, theta.x_loadings, theta.x_noise_var, post.mu_t, post.cov_tt, k);
    const ColumnInformation c =
        louis_column(data.y, theta.y_loadings, theta.y_noise_var, post.mu_u, post.cov_uu, k);
    out.se_w.col(k) = w.se;
    out.se_c.col(k) = c.se;
    out.degenerate_w.push_back(w.degenerate);
    out.degenerate_c.push_back(c.degenerate);
    out.degenerate = out.degenerate || w.degenerate || c.degenerate;
    if (w.degenerate) {
      out.warnings.push_back("information for w_" + std::to_string(k + 1) +
                             " is not positive definite; pseudo-inverse used");
    }
    if (c.degenerate) {
      out.warnings.push_back("information for c_" + std::to_string(k + 1) +
                             " is not positive definite; pseudo-inverse used");
    }
  }
  return out;
}

DataPair bootstrap_resample(const DataPair& data, std::uint64_t seed) {
  const Eigen::Index n = data.n();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  DataPair out;
  out.x.resize(n, data.p());
  out.y.resize(n, data.q());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = pick(rng);
    out.x.row(i) = data.x.row(src);
    out.y.row(i) = data.y.row(src);
  }
  return center(out);
}

LoadingSE bootstrap_se(const DataPair& data, const Theta& reference, const FitConfig& config,
                       const BootstrapOptions& options) {
  if (options.replicates < 2) {
    throw Error(ErrorCode::InvalidArgument, "bootstrap needs at least two replicates");
  }
  const Eigen::Index r = reference.r();
  const auto count = static_cast<std::size_t>(options.replicates);
  std::vector<std::optional<Theta>> fits(count);
  parallel_for(count, resolve_threads(options.threads), [&](std::size_t b) {
    try {
      const DataPair sample = bootstrap_resample(data, options.base_seed + b);
      const FitResult fit = fit_ppls(sample, r, config);
      if (fit.converged) fits[b] = align_estimates(fit.theta, reference).theta;
    } catch (const Error&) {
      // counted as a failed replicate below
    }
  });

  LoadingSE out;
  out.method = SeMethod::Bootstrap;
  Matrix sum_w = Matrix::Zero(reference.p(), r);
  Matrix sum_c = Matrix::Zero(reference.q(), r);
  int used = 0;
  for (const auto& fit : fits) {  // replicate-index order keeps the sums reproducible
    if (!fit) continue;
    sum_w += fit->x_loadings;
    sum_c += fit->y_loadings;
    ++used;
  }
  out.bootstrap_replicates = used;
  out.failed_replicates = options.replicates - used;
  if (out.failed_replicates > options.max_failed_fraction * options.replicates || used < 2) {
    throw Error(ErrorCode::TooManyFailedReplicates,
                std::to_string(out.failed_replicates) + " of " +
                    std::to_string(options.replicates) + " bootstrap replicates failed");
  }
  const Matrix mean_w = sum_w / used;
  const Matrix mean_c = sum_c / used;
  Matrix ss_w = Matrix::Zero(reference.p(), r);
  Matrix ss_c = Matrix::Zero(reference.q(), r);
  for (const auto& fit : fits) {
    if (!fit) continue;
    ss_w += (fit->x_loadings - mean_w).array().square().matrix();
    ss_c += (fit->y_loadings - mean_c).array().square().matrix();
  }
  out.se_w = (ss_w / (used - 1)).cwiseSqrt();
  out.se_c = (ss_c / (used - 1)).cwiseSqrt();
  if (out.failed_replicates > 0) {
    out.warnings.push_back(std::to_string(out.failed_replicates) +
                           " bootstrap replicates failed or did not converge");
  }
  return out;
}

LoadingSE bootstrap_se(const DataPair& data, Eigen::Index r, const FitConfig& config,
                       const BootstrapOptions& options) {
  const FitResult base = fit_ppls(data, r, config);
  return bootstrap_se(data, base.theta, config, options);
}

}  // namespace ppls
