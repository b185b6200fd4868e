#include "ppls/simulation.hpp"

#include "ppls/error.hpp"
#include "ppls/parallel.hpp"
#include "ppls/pls.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ppls {

std::string to_string(LatentDistribution d) {
  switch (d) {
    case LatentDistribution::Normal: return "normal";
    case LatentDistribution::StudentT2: return "t2";
    case LatentDistribution::Poisson1: return "poisson";
    case LatentDistribution::Binomial: return "binomial";
  }
  return "unknown";
}

LatentDistribution latent_distribution_from_string(const std::string& name) {
  if (name == "normal") return LatentDistribution::Normal;
  if (name == "t2") return LatentDistribution::StudentT2;
  if (name == "poisson") return LatentDistribution::Poisson1;
  if (name == "binomial") return LatentDistribution::Binomial;
  throw Error(ErrorCode::InvalidArgument, "unknown latent distribution '" + name +
                                              "' (expected normal, t2, poisson or binomial)");
}

std::string to_string(Estimator e) { return e == Estimator::Ppls ? "ppls" : "pls"; }

Estimator estimator_from_string(const std::string& name) {
  if (name == "ppls") return Estimator::Ppls;
  if (name == "pls") return Estimator::Pls;
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

void validate_config(const ScenarioConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (c.r < 1) fail("r must be positive");
  if (c.n <= c.r) fail("N must exceed r");
  if (c.p <= c.r || c.q <= c.r) fail("p and q must exceed r");
  if (!(c.noise_level > 0.0 && c.noise_level < 1.0)) fail("noise level must lie in (0, 1)");
  if (c.replicates < 1) fail("replicates must be positive");
  if (c.estimators.empty()) fail("at least one estimator is required");
  if (!(c.max_failed_fraction >= 0.0 && c.max_failed_fraction < 1.0)) {
    fail("max_failed_fraction must lie in [0, 1)");
  }
}

Loadings generate_loadings(Eigen::Index p, Eigen::Index q, Eigen::Index r, LoadingShift shift) {
  if (!(r > 0 && r < std::min(p, q))) {
    throw Error(ErrorCode::InvalidArgument, "generate_loadings needs 0 < r < min(p, q)");
  }
  // Rows and components are numbered from 1 in the density formula.
  auto bumps = [&](Eigen::Index d, double offset) {
    Matrix m(d, r);
    const double var = static_cast<double>(d) / 10.0;
    for (Eigen::Index k = 0; k < r; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) {
        const double jj = static_cast<double>(j + 1);
        const double step = shift == LoadingShift::Component ? static_cast<double>(k + 1)
                                                             : jj;
        const double mean = (offset + step / 10.0) * static_cast<double>(d);
        m(j, k) = std::exp(-0.5 * (jj - mean) * (jj - mean) / var) /
                  std::sqrt(2.0 * std::numbers::pi * var);
      }
    }
    return gram_schmidt_orthonormalize(m);
  };
  return {bumps(p, 0.5), bumps(q, 0.6)};
}

TrueModel make_true_model(const ScenarioConfig& config) {
  validate_config(config);
  const Eigen::Index r = config.r;
  const Loadings loadings = generate_loadings(config.p, config.q, r, config.loading_shift);
  Theta theta;
  theta.x_loadings = loadings.w;
  theta.y_loadings = loadings.c;
  theta.inner_slopes.resize(r);
  theta.score_variances.resize(r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double kk = static_cast<double>(k);
    theta.inner_slopes(k) = std::exp(std::log(1.5) - 3.0 * kk / 10.0);
    const double sd = std::exp(-kk / 10.0);
    theta.score_variances(k) = sd * sd;
  }
  const double a = config.noise_level;
  const double ratio = a / (1.0 - a);
  const double tr_t = theta.score_variances.sum();
  const double tr_bt =
      (theta.inner_slopes.array().square() * theta.score_variances.array()).sum();
  theta.x_noise_var = ratio * tr_t / static_cast<double>(config.p);
  theta.inner_noise_var = ratio * tr_bt / static_cast<double>(r);
  theta.y_noise_var = ratio * (tr_bt + static_cast<double>(r) * theta.inner_noise_var) /
                      static_cast<double>(config.q);
  require_valid_theta(theta);
  return {theta, config.distribution};
}

namespace {

// Fills an n x d matrix row by row from the family, then standardizes each
// column to sample mean 0 and sample SD 1 (N - 1 denominator).
Matrix standardized_draws(LatentDistribution family, Eigen::Index n, Eigen::Index d,
                          std::mt19937_64& rng) {
  Matrix m(n, d);
  switch (family) {
    case LatentDistribution::Normal: {
      std::normal_distribution<double> dist;
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
      break;
    }
    case LatentDistribution::StudentT2: {
      std::student_t_distribution<double> dist(2.0);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
      break;
    }
    case LatentDistribution::Poisson1: {
      std::poisson_distribution<int> dist(1.0);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
      break;
    }
    case LatentDistribution::Binomial: {
      std::binomial_distribution<int> dist(2, 0.25);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
      break;
    }
  }
  const Eigen::RowVectorXd mean = m.colwise().mean();
  m.rowwise() -= mean;
  for (Eigen::Index j = 0; j < d; ++j) {
    const double sd = std::sqrt(m.col(j).squaredNorm() / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw Error(ErrorCode::ZeroVariance, "a generated latent column has zero variance");
    }
    m.col(j) /= sd;
  }
  return m;
}

}  // namespace

GeneratedData generate_data(const TrueModel& model, Eigen::Index n, std::uint64_t seed) {
  const Theta& th = model.theta;
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "need at least two rows");
  std::mt19937_64 rng(seed);
  GeneratedData g;
  g.t = standardized_draws(model.distribution, n, th.r(), rng);
  g.h = standardized_draws(model.distribution, n, th.r(), rng);
  g.e = standardized_draws(model.distribution, n, th.p(), rng);
  g.f = standardized_draws(model.distribution, n, th.q(), rng);
  g.t = g.t * th.score_variances.cwiseSqrt().asDiagonal();
  g.h *= std::sqrt(th.inner_noise_var);
  g.e *= std::sqrt(th.x_noise_var);
  g.f *= std::sqrt(th.y_noise_var);
  g.u = g.t * th.inner_slopes.asDiagonal();
  g.u += g.h;
  g.data.x = g.t * th.x_loadings.transpose() + g.e;
  g.data.y = g.u * th.y_loadings.transpose() + g.f;
  g.data = center(g.data);
  return g;
}

namespace {

struct ReplicateOutcome {
  std::optional<Theta> estimate;  // aligned to the truth
  bool ordering_correct = false;
  bool converged = true;
};

ReplicateOutcome fit_one(Estimator est, const DataPair& data, const Theta& truth,
                         const FitConfig& fit_config) {
  ReplicateOutcome out;
  try {
    if (est == Estimator::Ppls) {
      const FitResult fit = fit_ppls(data, truth.r(), fit_config);
      const AlignedTheta aligned = align_estimates(fit.theta, truth);
      out.estimate = aligned.theta;
      out.ordering_correct = aligned.match.ordering_correct;
      out.converged = fit.converged;
    } else {
      const PlsFit fit = fit_pls(data, truth.r());
      const LoadingMatch match = match_loadings(fit.x_weights, truth.x_loadings);
      Theta t;
      t.x_loadings = apply_match(fit.x_weights, match);
      t.y_loadings = apply_match(fit.y_weights, match);
      t.inner_slopes = Vector::Zero(truth.r());
      t.score_variances = Vector::Zero(truth.r());
      out.estimate = t;
      out.ordering_correct = match.ordering_correct;
    }
  } catch (const Error&) {
    out.estimate.reset();
  }
  return out;
}

// Mean and N - 1 variance of a sequence of equally shaped matrices, summed in order.
void entry_moments(const std::vector<const Matrix*>& items, Matrix& mean, Matrix& var) {
  const auto n = static_cast<double>(items.size());
  mean = Matrix::Zero(items.front()->rows(), items.front()->cols());
  for (const Matrix* m : items) mean += *m;
  mean /= n;
  var = Matrix::Zero(mean.rows(), mean.cols());
  if (items.size() < 2) return;
  for (const Matrix* m : items) var += (*m - mean).array().square().matrix();
  var /= n - 1.0;
}

RelativeSummary relative(const std::string& name, double truth, const std::vector<double>& est) {
  RelativeSummary s;
  s.name = name;
  s.truth = truth;
  const auto n = static_cast<double>(est.size());
  double mean = 0.0;
  for (double v : est) mean += v;
  mean /= n;
  s.relative_bias = mean / truth - 1.0;
  if (est.size() > 1) {
    double ss = 0.0;
    for (double v : est) ss += (v - mean) * (v - mean);
    s.relative_variance = ss / (n - 1.0) / (truth * truth);
  }
  return s;
}

std::vector<RelativeSummary> variance_parameter_summaries(const Theta& truth,
                                                          const std::vector<const Theta*>& fits) {
  std::vector<RelativeSummary> out;
  auto collect = [&](auto getter) {
    std::vector<double> v;
    v.reserve(fits.size());
    for (const Theta* t : fits) v.push_back(getter(*t));
    return v;
  };
  for (Eigen::Index k = 0; k < truth.r(); ++k) {
    const std::string idx = std::to_string(k + 1);
    out.push_back(relative("b" + idx, truth.inner_slopes(k),
                           collect([k](const Theta& t) { return t.inner_slopes(k); })));
  }
  for (Eigen::Index k = 0; k < truth.r(); ++k) {
    const std::string idx = std::to_string(k + 1);
    out.push_back(relative("sigma_t" + idx, std::sqrt(truth.score_variances(k)),
                           collect([k](const Theta& t) { return std::sqrt(t.score_variances(k)); })));
  }
  out.push_back(relative("sigma_e", std::sqrt(truth.x_noise_var),
                         collect([](const Theta& t) { return std::sqrt(t.x_noise_var); })));
  out.push_back(relative("sigma_f", std::sqrt(truth.y_noise_var),
                         collect([](const Theta& t) { return std::sqrt(t.y_noise_var); })));
  out.push_back(relative("sigma_h", std::sqrt(truth.inner_noise_var),
                         collect([](const Theta& t) { return std::sqrt(t.inner_noise_var); })));
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  ScenarioResult result;
  result.config = config;
  result.truth = make_true_model(config);
  const Theta& truth = result.truth.theta;
  const auto reps = static_cast<std::size_t>(config.replicates);
  const std::size_t n_est = config.estimators.size();

  std::vector<std::vector<ReplicateOutcome>> outcomes(n_est,
                                                      std::vector<ReplicateOutcome>(reps));
  parallel_for(reps, resolve_threads(config.threads), [&](std::size_t b) {
    const GeneratedData g = generate_data(result.truth, config.n, config.base_seed + b);
    for (std::size_t e = 0; e < n_est; ++e) {
      outcomes[e][b] = fit_one(config.estimators[e], g.data, truth, config.fit);
    }
  });

  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorResult er;
    er.estimator = config.estimators[e];
    std::vector<const Theta*> fits;
    int ordered = 0;
    for (const ReplicateOutcome& o : outcomes[e]) {
      if (!o.estimate) {
        ++er.failed;
        continue;
      }
      fits.push_back(&*o.estimate);
      if (o.ordering_correct) ++ordered;
      if (!o.converged) ++er.not_converged;
    }
    er.successful = static_cast<int>(fits.size());
    if (er.failed > config.max_failed_fraction * config.replicates || fits.empty()) {
      throw Error(ErrorCode::ScenarioFailed,
                  to_string(er.estimator) + ": " + std::to_string(er.failed) + " of " +
                      std::to_string(config.replicates) + " replicate fits failed");
    }
    er.ordering_correct_proportion = static_cast<double>(ordered) / er.successful;
    er.has_variance = fits.size() > 1;

    std::vector<const Matrix*> ws, cs;
    for (const Theta* t : fits) {
      ws.push_back(&t->x_loadings);
      cs.push_back(&t->y_loadings);
    }
    Matrix mean;
    entry_moments(ws, mean, er.loadings.variance_w);
    er.loadings.bias_w = mean - truth.x_loadings;
    entry_moments(cs, mean, er.loadings.variance_c);
    er.loadings.bias_c = mean - truth.y_loadings;
    if (er.estimator == Estimator::Ppls) {
      er.variance_parameters = variance_parameter_summaries(truth, fits);
    }
    if (config.keep_replicates) {
      for (const Theta* t : fits) er.replicates.push_back(*t);
    }
    result.estimators.push_back(std::move(er));
  }
  return result;
}

}  // namespace ppls
