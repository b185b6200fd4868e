#include "ppls/em.hpp"

#include "ppls/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace ppls {

std::string to_string(Orthogonalization o) {
  switch (o) {
    case Orthogonalization::CholeskyLower: return "cholesky";
    case Orthogonalization::Eigenvectors: return "eigen";
  }
  return "unknown";
}

Orthogonalization orthogonalization_from_string(const std::string& name) {
  if (name == "cholesky") return Orthogonalization::CholeskyLower;
  if (name == "eigen") return Orthogonalization::Eigenvectors;
  throw Error(ErrorCode::InvalidArgument, "unknown orthogonalization '" + name + "'");
}

namespace {

// Everything the M-step consumes. Built either from explicit conditional
// means (public e_step path) or directly from the sample second moments, which
// keeps the per-iteration cost of fit_ppls independent of N.
struct MStepInputs {
  Matrix x_mu_t;  // X^T mu_T, p x r
  Matrix y_mu_u;  // Y^T mu_U, q x r
  Matrix ctt;
  Matrix cuu;
  Matrix cut;
  double trace_xx = 0.0;
  double trace_yy = 0.0;
  double n = 0.0;
};

struct ConditionalGains {
  Matrix gain_t;  // Sigma^{-1} cov((x, y), t)
  Matrix gain_u;  // Sigma^{-1} cov((x, y), u)
  Matrix cond_tt; // var(t) - cov(t, (x, y)) Sigma^{-1} cov((x, y), t), per row
  Matrix cond_uu;
  Matrix cond_ut;
};

ConditionalGains conditional_gains(const Theta& theta) {
  const CovarianceBlocks blocks = assemble_sigma(theta);
  const SpdFactor sigma(blocks.joint());
  const Matrix cov_t = blocks.joint_cov_t();
  const Matrix cov_u = blocks.joint_cov_u();
  const Eigen::Index r = theta.r();
  Matrix rhs(cov_t.rows(), 2 * r);
  rhs << cov_t, cov_u;
  const Matrix gains = sigma.solve(rhs);

  ConditionalGains out;
  out.gain_t = gains.leftCols(r);
  out.gain_u = gains.rightCols(r);
  const Vector st_b = theta.score_variances.cwiseProduct(theta.inner_slopes);
  out.cond_tt = Matrix(theta.score_variances.asDiagonal()) - cov_t.transpose() * out.gain_t;
  out.cond_uu = Matrix(theta.inner_score_variances().asDiagonal()) - cov_u.transpose() * out.gain_u;
  out.cond_ut = Matrix(st_b.asDiagonal()) - cov_u.transpose() * out.gain_t;
  return out;
}

MStepInputs inputs_from_sample(const SampleMoments& s, const Theta& theta) {
  const ConditionalGains g = conditional_gains(theta);
  const double n = static_cast<double>(s.n);
  const Matrix s_gt = s.joint * g.gain_t;
  const Matrix s_gu = s.joint * g.gain_u;
  MStepInputs in;
  in.n = n;
  in.ctt = n * (g.cond_tt + g.gain_t.transpose() * s_gt);
  in.cuu = n * (g.cond_uu + g.gain_u.transpose() * s_gu);
  in.cut = n * (g.cond_ut + g.gain_u.transpose() * s_gt);
  in.x_mu_t = n * s_gt.topRows(s.p);
  in.y_mu_u = n * s_gu.bottomRows(s.q);
  in.trace_xx = n * s.joint.topLeftCorner(s.p, s.p).trace();
  in.trace_yy = n * s.joint.bottomRightCorner(s.q, s.q).trace();
  return in;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Orthonormal W = A (L^T)^{-1} with L L^T = A^T A.
Matrix orthonormal_update(const Matrix& a, Orthogonalization method) {
  const Matrix gram = symmetrize(a.transpose() * a);
  switch (method) {
    case Orthogonalization::CholeskyLower: {
      const Matrix lower = cholesky_lower(gram);
      // W^T = L^{-1} A^T
      return lower.triangularView<Eigen::Lower>().solve(a.transpose()).transpose();
    }
    case Orthogonalization::Eigenvectors:
      return a * inverse_sqrt_spd(gram);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown orthogonalization");
}

double noise_trace(double trace_data, const Matrix& data_mu, const Matrix& loadings,
                   const Matrix& second_moment) {
  return trace_data - 2.0 * (loadings.transpose() * data_mu).trace() +
         (second_moment * (loadings.transpose() * loadings)).trace();
}

double inner_noise_trace(const Matrix& cuu, const Matrix& cut, const Matrix& ctt,
                         const Vector& slopes) {
  double out = cuu.trace();
  for (Eigen::Index k = 0; k < slopes.size(); ++k) {
    out += -2.0 * slopes(k) * cut(k, k) + slopes(k) * slopes(k) * ctt(k, k);
  }
  return out;
}

struct VarianceFloor {
  bool allow = false;
  std::vector<std::string>* warnings = nullptr;
};

double checked_variance(double value, const char* name, const VarianceFloor& floor) {
  if (value > 0.0 && std::isfinite(value)) return value;
  if (floor.allow && std::isfinite(value)) {
    if (floor.warnings) {
      floor.warnings->push_back(std::string(name) + " update " + std::to_string(value) +
                                " floored at 1e-12");
    }
    return 1e-12;
  }
  throw Error(ErrorCode::NegativeVariance,
              std::string(name) + " update is " + std::to_string(value));
}

Theta m_step_from(const MStepInputs& in, Orthogonalization method, const VarianceFloor& floor) {
  const Eigen::Index r = in.ctt.rows();
  const auto p = static_cast<double>(in.x_mu_t.rows());
  const auto q = static_cast<double>(in.y_mu_u.rows());
  Theta out;
  out.x_loadings = orthonormal_update(in.x_mu_t, method);
  out.y_loadings = orthonormal_update(in.y_mu_u, method);

  // Exact maximizer over diagonal B: b_k = E(u_k^T t_k) / E(t_k^T t_k).
  out.inner_slopes.resize(r);
  out.score_variances.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double ctt_kk = in.ctt(k, k);
    if (!(ctt_kk > 0.0)) {
      throw Error(ErrorCode::NotPositiveDefinite, "E(t_k^T t_k) is not positive");
    }
    out.inner_slopes(k) = in.cut(k, k) / ctt_kk;
    out.score_variances(k) =
        checked_variance(ctt_kk / in.n, "sigma_t^2", floor);
  }

  const double ee = noise_trace(in.trace_xx, in.x_mu_t, out.x_loadings, in.ctt);
  const double ff = noise_trace(in.trace_yy, in.y_mu_u, out.y_loadings, in.cuu);
  const double hh = inner_noise_trace(in.cuu, in.cut, in.ctt, out.inner_slopes);
  out.x_noise_var = checked_variance(ee / (in.n * p), "sigma_e^2", floor);
  out.y_noise_var = checked_variance(ff / (in.n * q), "sigma_f^2", floor);
  out.inner_noise_var = checked_variance(hh / (in.n * static_cast<double>(r)), "sigma_h^2", floor);

  // u_k -> -u_k leaves the distribution of (x, y) unchanged.
  for (Eigen::Index k = 0; k < r; ++k) {
    if (out.inner_slopes(k) < 0.0) {
      out.inner_slopes(k) = -out.inner_slopes(k);
      out.y_loadings.col(k) *= -1.0;
    }
  }
  return out;
}

void require_fit_dims(const DataPair& data, Eigen::Index r) {
  if (!data.centered) {
    throw Error(ErrorCode::InvalidArgument, "fitting needs column-centered data");
  }
  if (!(r > 0 && r < std::min({data.n(), data.p(), data.q()}))) {
    throw Error(ErrorCode::DimensionMismatch,
                "need 0 < r < min(N, p, q); got r = " + std::to_string(r) + " with N = " +
                    std::to_string(data.n()) + ", p = " + std::to_string(data.p()) +
                    ", q = " + std::to_string(data.q()));
  }
}

}  // namespace

LatentPosterior latent_posterior(const DataPair& data, const Theta& theta) {
  if (!data.centered) {
    throw Error(ErrorCode::InvalidArgument, "latent moments need column-centered data");
  }
  if (data.p() != theta.p() || data.q() != theta.q()) {
    throw Error(ErrorCode::DimensionMismatch, "data and theta dimensions differ");
  }
  const ConditionalGains g = conditional_gains(theta);
  const Eigen::Index p = data.p();
  const Eigen::Index q = data.q();
  LatentPosterior out;
  out.mu_t = data.x * g.gain_t.topRows(p) + data.y * g.gain_t.bottomRows(q);
  out.mu_u = data.x * g.gain_u.topRows(p) + data.y * g.gain_u.bottomRows(q);
  out.cov_tt = symmetrize(g.cond_tt);
  out.cov_uu = symmetrize(g.cond_uu);
  out.cov_ut = g.cond_ut;
  return out;
}

EStepMoments e_step(const DataPair& data, const Theta& theta) {
  LatentPosterior post = latent_posterior(data, theta);
  const double n = static_cast<double>(data.n());
  EStepMoments m;
  m.mu_t = std::move(post.mu_t);
  m.mu_u = std::move(post.mu_u);
  m.ctt = n * post.cov_tt + m.mu_t.transpose() * m.mu_t;
  m.cuu = n * post.cov_uu + m.mu_u.transpose() * m.mu_u;
  m.cut = n * post.cov_ut + m.mu_u.transpose() * m.mu_t;
  m.exp_ee = noise_trace(data.x.squaredNorm(), data.x.transpose() * m.mu_t, theta.x_loadings, m.ctt);
  m.exp_ff = noise_trace(data.y.squaredNorm(), data.y.transpose() * m.mu_u, theta.y_loadings, m.cuu);
  m.exp_hh = inner_noise_trace(m.cuu, m.cut, m.ctt, theta.inner_slopes);
  return m;
}

Theta m_step(const DataPair& data, const EStepMoments& moments, const FitConfig& config) {
  const Eigen::Index r = moments.ctt.rows();
  if (moments.mu_t.rows() != data.n() || moments.mu_u.rows() != data.n() ||
      moments.mu_t.cols() != r || moments.mu_u.cols() != r) {
    throw Error(ErrorCode::DimensionMismatch, "moments do not match the data");
  }
  MStepInputs in;
  in.n = static_cast<double>(data.n());
  in.x_mu_t = data.x.transpose() * moments.mu_t;
  in.y_mu_u = data.y.transpose() * moments.mu_u;
  in.ctt = moments.ctt;
  in.cuu = moments.cuu;
  in.cut = moments.cut;
  in.trace_xx = data.x.squaredNorm();
  in.trace_yy = data.y.squaredNorm();
  return m_step_from(in, config.orthogonalization, {});
}

Theta initialize_theta(const DataPair& data, Eigen::Index r, std::uint64_t seed) {
  require_fit_dims(data, r);
  const double n = static_cast<double>(data.n());
  const Matrix cross = data.x.transpose() * data.y;
  const Eigen::Index k_max = std::min(cross.rows(), cross.cols());
  const ThinSvd svd = thin_svd(cross, k_max);
  const double largest = svd.values(0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < svd.values.size(); ++i) {
    if (svd.values(i) > 1e-10 * largest) ++rank;
  }
  if (!(largest > 0.0) || rank < r) {
    throw Error(ErrorCode::RankDeficient, "X^T Y has " + std::to_string(rank) +
                                              " significant singular values, r = " +
                                              std::to_string(r));
  }

  Theta theta;
  theta.x_loadings = svd.left.leftCols(r);
  theta.y_loadings = svd.right.leftCols(r);
  if (seed != 0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    auto perturb = [&](Matrix& loadings) {
      Matrix noise(loadings.rows(), loadings.cols());
      for (Eigen::Index j = 0; j < noise.cols(); ++j)
        for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = normal(rng);
      noise *= 1e-2 / std::sqrt(static_cast<double>(loadings.rows()));
      loadings = gram_schmidt_orthonormalize(loadings + noise);
    };
    perturb(theta.x_loadings);
    perturb(theta.y_loadings);
  }

  const Matrix scores_t = data.x * theta.x_loadings;
  const Matrix scores_u = data.y * theta.y_loadings;
  const double x_total = data.x.squaredNorm();
  const double y_total = data.y.squaredNorm();
  const double variance_floor = 1e-8 * std::max(x_total / (n * data.p()), 1e-300);
  theta.score_variances.resize(r);
  theta.inner_slopes.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double var_t = std::max(scores_t.col(k).squaredNorm() / n, variance_floor);
    const double cross_k = theta.x_loadings.col(k).dot(cross * theta.y_loadings.col(k)) / n;
    theta.score_variances(k) = var_t;
    theta.inner_slopes(k) = std::max(std::abs(cross_k) / var_t, 1e-8);
  }
  const double resid_x = (data.x - scores_t * theta.x_loadings.transpose()).squaredNorm();
  const double resid_y = (data.y - scores_u * theta.y_loadings.transpose()).squaredNorm();
  theta.x_noise_var = std::max(resid_x / (n * data.p()), 1e-6 * x_total / (n * data.p()));
  theta.y_noise_var = std::max(resid_y / (n * data.q()), 1e-6 * y_total / (n * data.q()));
  theta.inner_noise_var =
      0.1 * (theta.inner_slopes.array().square() * theta.score_variances.array()).mean();
  return canonicalize_theta(theta).theta;
}

FitResult fit_ppls_from(const DataPair& data, const Theta& start, const FitConfig& config) {
  require_fit_dims(data, start.r());
  if (config.max_iter < 1 || !(config.tol_loglik > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1 and tol_loglik > 0");
  }
  const SampleMoments s = sample_moments(data);
  FitResult result;
  Theta theta = start;
  double current = log_likelihood(s, theta);
  if (!std::isfinite(current)) {
    throw Error(ErrorCode::NonFiniteLikelihood, "starting log-likelihood is not finite");
  }
  result.loglik_trace.push_back(current);
  const int late_stage = config.max_iter - config.max_iter / 10;
  for (int it = 1; it <= config.max_iter; ++it) {
    const VarianceFloor floor{it > late_stage, &result.warnings};
    theta = m_step_from(inputs_from_sample(s, theta), config.orthogonalization, floor);
    const double next = log_likelihood(s, theta);
    if (!std::isfinite(next)) {
      throw Error(ErrorCode::NonFiniteLikelihood,
                  "log-likelihood left the finite range at iteration " + std::to_string(it));
    }
    result.loglik_trace.push_back(next);
    result.iterations = it;
    const double increment = next - current;
    current = next;
    if (increment < config.tol_loglik) {
      result.converged = true;
      break;
    }
  }
  result.theta = canonicalize_theta(theta).theta;
  result.final_moments = e_step(data, result.theta);
  return result;
}

FitResult fit_ppls(const DataPair& data, Eigen::Index r, const FitConfig& config) {
  require_fit_dims(data, r);
  return fit_ppls_from(data, initialize_theta(data, r, config.seed), config);
}

double expected_complete_loglik(const DataPair& data, const EStepMoments& moments,
                                const Theta& candidate) {
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  const double q = static_cast<double>(data.q());
  const double r = static_cast<double>(candidate.r());
  const double log2pi = std::log(2.0 * std::numbers::pi);

  const double ee = noise_trace(data.x.squaredNorm(), data.x.transpose() * moments.mu_t,
                                candidate.x_loadings, moments.ctt);
  const double ff = noise_trace(data.y.squaredNorm(), data.y.transpose() * moments.mu_u,
                                candidate.y_loadings, moments.cuu);
  const double hh = inner_noise_trace(moments.cuu, moments.cut, moments.ctt, candidate.inner_slopes);

  double out = -0.5 * n * p * (log2pi + std::log(candidate.x_noise_var)) - 0.5 * ee / candidate.x_noise_var;
  out += -0.5 * n * q * (log2pi + std::log(candidate.y_noise_var)) - 0.5 * ff / candidate.y_noise_var;
  out += -0.5 * n * r * (log2pi + std::log(candidate.inner_noise_var)) - 0.5 * hh / candidate.inner_noise_var;
  out += -0.5 * n * r * log2pi;
  for (Eigen::Index k = 0; k < candidate.r(); ++k) {
    const double v = candidate.score_variances(k);
    out += -0.5 * n * std::log(v) - 0.5 * moments.ctt(k, k) / v;
  }
  return out;
}

}  // namespace ppls
