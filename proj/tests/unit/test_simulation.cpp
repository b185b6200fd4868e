#include "doctest.h"
#include "support.hpp"

#include "ppls/error.hpp"
#include "ppls/simulation.hpp"

#include <numbers>

using namespace ppls;

TEST_CASE("loadings are orthonormal bumps moving with the component") {
  const Loadings l = generate_loadings(20, 20, 3);
  CHECK((l.w.transpose() * l.w - Matrix::Identity(3, 3)).norm() < 1e-12);
  CHECK((l.c.transpose() * l.c - Matrix::Identity(3, 3)).norm() < 1e-12);

  // before orthonormalization the first column is the bare density
  const double var = 2.0;
  Vector raw(20);
  for (int j = 0; j < 20; ++j) {
    const double d = (j + 1) - 0.6 * 20;
    raw(j) = std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
  }
  CHECK((l.w.col(0) - raw.normalized()).norm() < 1e-12);

  Eigen::Index prev = -1;
  for (int k = 0; k < 3; ++k) {
    Eigen::Index peak = 0;
    l.w.col(k).maxCoeff(&peak);
    CHECK(peak > prev);
    prev = peak;
  }

  // the bump centre scales with p
  const Loadings big = generate_loadings(40, 40, 3);
  Eigen::Index p20 = 0, p40 = 0;
  l.w.col(0).maxCoeff(&p20);
  big.w.col(0).maxCoeff(&p40);
  CHECK(p40 + 1 == 2 * (p20 + 1));
}

TEST_CASE("the entry-shift variant collapses the columns") {
  CHECK_THROWS_AS(generate_loadings(20, 20, 3, LoadingShift::Entry), Error);
}

TEST_CASE("true model values") {
  ScenarioConfig cfg;
  cfg.noise_level = 0.5;
  const TrueModel m = make_true_model(cfg);
  CHECK(m.theta.inner_slopes(0) == doctest::Approx(1.5));
  CHECK(m.theta.inner_slopes(1) == doctest::Approx(1.1112).epsilon(1e-4));
  CHECK(m.theta.inner_slopes(2) == doctest::Approx(1.5 * std::exp(-0.6)));
  CHECK(std::sqrt(m.theta.score_variances(1)) == doctest::Approx(0.9048).epsilon(1e-4));
  CHECK(std::sqrt(m.theta.score_variances(2)) == doctest::Approx(0.8187).epsilon(1e-4));
  CHECK(m.theta.x_noise_var == doctest::Approx(m.theta.score_variances.sum() / 20.0));
  CHECK(validate_theta(m.theta).empty());
  const Vector s = m.theta.component_strength();
  CHECK(s(0) == doctest::Approx(1.5));
  CHECK(s(1) == doctest::Approx(0.9098).epsilon(1e-3));
}

TEST_CASE("noise calibration holds in a large sample") {
  ScenarioConfig cfg;
  cfg.noise_level = 0.5;
  const TrueModel m = make_true_model(cfg);
  const GeneratedData g = generate_data(m, 100000, 1);
  const double ratio = g.e.squaredNorm() / (g.t * m.theta.x_loadings.transpose() + g.e).squaredNorm();
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("generated data follow the structural equations") {
  ScenarioConfig cfg;
  const TrueModel m = make_true_model(cfg);
  const GeneratedData g = generate_data(m, 300, 5);
  const Matrix x = g.t * m.theta.x_loadings.transpose() + g.e;
  CHECK(((g.u - g.t * m.theta.inner_slopes.asDiagonal()) - g.h).norm() < 1e-12);
  CHECK((g.data.x - (x.rowwise() - x.colwise().mean())).norm() < 1e-12);
  CHECK(g.data.centered);

  // deterministic
  const GeneratedData again = generate_data(m, 300, 5);
  CHECK((again.data.x - g.data.x).norm() == 0.0);
}

TEST_CASE("normal data reproduce the model covariance") {
  ScenarioConfig cfg;
  cfg.p = cfg.q = 8;
  const TrueModel m = make_true_model(cfg);
  const GeneratedData g = generate_data(m, 1000000, 2);
  const SampleMoments s = sample_moments(g.data);
  const Matrix sigma = assemble_sigma(m.theta).joint();
  CHECK((s.joint - sigma).norm() / sigma.norm() < 0.01);
}

TEST_CASE("every family is standardized to the model variances") {
  for (auto fam : {LatentDistribution::Normal, LatentDistribution::StudentT2,
                   LatentDistribution::Poisson1, LatentDistribution::Binomial}) {
    ScenarioConfig cfg;
    cfg.distribution = fam;
    const TrueModel m = make_true_model(cfg);
    const GeneratedData g = generate_data(m, 100000, 3);
    for (int k = 0; k < 3; ++k) {
      const double var = g.t.col(k).squaredNorm() / (g.t.rows() - 1);
      CHECK(var == doctest::Approx(m.theta.score_variances(k)).epsilon(1e-10));
      CHECK(std::abs(g.t.col(k).mean()) < 1e-10);
    }
    const double max_mean = g.data.x.colwise().mean().cwiseAbs().maxCoeff();
    CHECK(max_mean < 1e-10);
  }
}

TEST_CASE("alignment undoes sign flips and swaps") {
  ScenarioConfig cfg;
  const TrueModel m = make_true_model(cfg);
  const AlignedTheta same = align_estimates(m.theta, m.theta);
  CHECK(same.match.ordering_correct);
  CHECK(same.match.signs == Vector::Ones(3));

  Vector signs(3);
  signs << -1, 1, 1;
  const Theta perturbed = permute_components(m.theta, {1, 0, 2}, signs);
  const AlignedTheta a = align_estimates(perturbed, m.theta);
  CHECK_FALSE(a.match.ordering_correct);
  CHECK((a.theta.x_loadings - m.theta.x_loadings).norm() < 1e-15);
  CHECK((a.theta.y_loadings - m.theta.y_loadings).norm() < 1e-15);
  CHECK((a.theta.inner_slopes - m.theta.inner_slopes).norm() == 0.0);
}

TEST_CASE("greedy matching always yields a permutation") {
  std::mt19937_64 rng(400);
  for (int rep = 0; rep < 1000; ++rep) {
    const Matrix ref = testing::random_orthonormal(10, 3, rng);
    const Matrix est = testing::random_orthonormal(10, 3, rng);
    const LoadingMatch match = match_loadings(est, ref);
    std::vector<int> seen = match.permutation;
    std::sort(seen.begin(), seen.end());
    CHECK(seen == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("scenario runs are reproducible and complete") {
  ScenarioConfig cfg;
  cfg.n = 200;
  cfg.replicates = 12;
  cfg.threads = 2;
  const ScenarioResult a = run_scenario(cfg);
  cfg.threads = 1;
  const ScenarioResult b = run_scenario(cfg);
  REQUIRE(a.estimators.size() == 2);
  for (std::size_t e = 0; e < 2; ++e) {
    CHECK((a.estimators[e].loadings.bias_w - b.estimators[e].loadings.bias_w).norm() == 0.0);
    CHECK((a.estimators[e].loadings.variance_c - b.estimators[e].loadings.variance_c).norm() == 0.0);
    CHECK(a.estimators[e].ordering_correct_proportion >= 0.0);
    CHECK(a.estimators[e].ordering_correct_proportion <= 1.0);
    CHECK(a.estimators[e].successful == 12);
  }
  CHECK(a.estimators[0].variance_parameters.size() == 3 + 3 + 3);
  CHECK(a.estimators[1].variance_parameters.empty());
}

TEST_CASE("a single replicate has no variance") {
  ScenarioConfig cfg;
  cfg.n = 100;
  cfg.replicates = 1;
  cfg.estimators = {Estimator::Ppls};
  const ScenarioResult r = run_scenario(cfg);
  CHECK_FALSE(r.estimators[0].has_variance);
  CHECK_FALSE(r.estimators[0].variance_parameters[0].relative_variance.has_value());
}

TEST_CASE("config validation") {
  ScenarioConfig cfg;
  cfg.noise_level = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), Error);
  cfg = {};
  cfg.n = 3;
  CHECK_THROWS_AS(validate_config(cfg), Error);
  cfg = {};
  cfg.estimators.clear();
  CHECK_THROWS_AS(validate_config(cfg), Error);
  CHECK(latent_distribution_from_string("t2") == LatentDistribution::StudentT2);
  CHECK_THROWS_AS(latent_distribution_from_string("cauchy"), Error);
}
