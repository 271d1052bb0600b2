#include <pcic/estimators.hpp>
#include <pcic/models/generate.hpp>
#include <pcic/models/location.hpp>
#include <pcic/parallel.hpp>
#include <pcic/stats.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "test_support.hpp"

namespace pcic {
namespace {

using testing::rows_of;

// Closed-form E over datasets of V for the conjugate model, written out independently of
// the library: V = -(2a/n) mean_i (X_i - th)^T A (X_i - th) - beta tr(A) S^2 with
// E mean_i(...) = (n-1)/n tr(A) + (1-a)^2 (th*^T A th* + tr(A)/n) under identity noise.
double expected_v(std::size_t n_obs, double beta, double tau, const Matrix& a, const Vector& theta_star) {
  const double n = static_cast<double>(n_obs);
  const double af = n * beta * tau / (n * beta * tau + 1.0);
  const double s = 1.0 / (n * beta + 1.0 / tau);
  const double tr = a.trace();
  const double quad = (n - 1.0) / n * tr + (1.0 - af) * (1.0 - af) * (theta_star.dot(a * theta_star) + tr / n);
  return -2.0 * af / n * quad - beta * tr * s * s;
}

TEST(LocationPosterior, SingleObservation) {
  const Dataset data(rows_of({{2.0}}));
  const auto post = location_posterior(data, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(post.theta_hat[0], 1.0);
  EXPECT_DOUBLE_EQ(post.s_scale, 0.5);
  EXPECT_DOUBLE_EQ(post.a_factor, 0.5);
  EXPECT_THROW(location_posterior(data, 0.0, 1.0), DomainError);
}

TEST(LocationPosterior, ExactDrawsHaveTargetMoments) {
  LocationPosterior post;
  post.theta_hat = Eigen::Vector2d(1.0, -2.0);
  post.s_scale = 0.3;
  const auto draws = location_exact_draws(post, 200000, 5);
  const RowMatrix centered = draws.matrix().rowwise() - draws.matrix().colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(draws.size() - 1);
  EXPECT_NEAR(cov(0, 0), 0.3, 0.05 * 0.3);
  EXPECT_NEAR(cov(1, 1), 0.3, 0.05 * 0.3);
  EXPECT_NEAR(cov(0, 1), 0.0, 0.05 * 0.3);
  EXPECT_EQ(draws.provenance().sampler, "location-exact");
}

TEST(LocationModel, ValidatesInputs) {
  const Vector t = Vector::Zero(2);
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(LocationModel(t, 1.0, 1.0, asym), DomainError);
  Matrix indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(LocationModel(t, 1.0, 1.0, indefinite), DomainError);
  EXPECT_THROW(LocationModel(t, 1.0, 1.0, Matrix::Identity(3, 3)), DimensionError);
  EXPECT_THROW(LocationModel(t, -1.0, 1.0, Matrix::Identity(2, 2)), DomainError);
}

TEST(OracleGibbsGap, HandValues) {
  EXPECT_NEAR(oracle_gibbs_gap(50, 1.0, 1e12, Matrix::Identity(1, 1)), 0.04, 1e-12);
  Matrix a = Matrix::Zero(2, 2);
  a.diagonal() << 1.0, 2.0;
  EXPECT_NEAR(oracle_gibbs_gap(10, 1.0, 1.0, a), 6.0 / 11.0, 1e-15);
}

TEST(OracleRem, HandValueAndOrder) {
  // n = beta = tau = 1, A = 1: a = S = 1/2, rem = 1/4 + (1/8 - 1/2) * 2.
  EXPECT_DOUBLE_EQ(oracle_rem(1, 1.0, 1.0, Matrix::Identity(1, 1)), -0.5);
  for (std::size_t n : {10u, 100u, 1000u, 10000u, 100000u}) {
    const double scaled = oracle_rem(n, 1.0, 2.0, Matrix::Identity(3, 3)) * static_cast<double>(n * n);
    EXPECT_LT(std::abs(scaled), 10.0) << "n = " << n;
  }
}

TEST(OracleBias, VanishesAtOriginAndScalesWithSignal) {
  const LocationModel zero(Vector::Zero(1), 1.0, 0.01, Matrix::Identity(1, 1));
  EXPECT_DOUBLE_EQ(oracle_bias_term(zero, 100), 0.0);
  const LocationModel five(Vector::Constant(1, 5.0), 1.0, 0.01, Matrix::Identity(1, 1));
  // a = 1/2, (n beta tau + 1)^2 = 4.
  EXPECT_NEAR(oracle_bias_term(five, 100), 2.0 / 100.0 * 0.5 * 25.0 / 4.0, 1e-15);
}

TEST(OracleClosure, ExpectedCorrectionMatchesGapBiasAndRemainder) {
  Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = static_cast<Eigen::Index>(testing::random_size(rng, 1, 4));
    const std::size_t n = testing::random_size(rng, 1, 200);
    const double beta = 0.1 + 3.0 * uniform01(rng);
    const double tau = std::exp(-4.0 + 8.0 * uniform01(rng));
    const RowMatrix root = testing::random_matrix(rng, d, d);
    const Matrix a = root.transpose() * root + Matrix::Identity(d, d);
    const Vector theta_star = testing::random_matrix(rng, d, 1, 3.0).col(0);
    const LocationModel model(theta_star, beta, tau, a);

    const double closure = oracle_gibbs_gap(n, beta, tau, a) + expected_v(n, beta, tau, a, theta_star) +
                           oracle_bias_term(model, n) + oracle_rem(n, beta, tau, a);
    EXPECT_NEAR(closure, 0.0, 1e-10 * (1.0 + a.trace())) << "trial " << trial;
  }
}

TEST(OracleClosure, MonteCarloGapAndCorrectionOverDatasets) {
  const double beta = 1.0;
  const double tau = 1.0;
  const std::size_t n = 10;
  const Vector theta_star = Vector::Constant(1, 1.0);
  const Matrix a = Matrix::Identity(1, 1);
  const LocationModel model(theta_star, beta, tau, a);

  const int reps = 40000;
  std::vector<double> gap(reps);
  std::vector<double> v(reps);
  for (int r = 0; r < reps; ++r) {
    const auto data = generate_data(LocationDataParams{theta_star}, n, derive_seed(9, r));
    const auto post = location_posterior(data, beta, tau);
    const double th = post.theta_hat[0];
    // Posterior-averaged generalization and training errors in closed form.
    double train = 0.0;
    for (std::size_t i = 0; i < n; ++i) train += (data.row(i)[0] - th) * (data.row(i)[0] - th);
    train = train / static_cast<double>(n) + post.s_scale;
    const double general = 1.0 + (th - 1.0) * (th - 1.0) + post.s_scale;
    gap[r] = general - train;
    v[r] = oracle_expected_covariance(data, model);
  }
  const auto g = summarize(gap);
  const auto vs = summarize(v);
  EXPECT_NEAR(g.mean, oracle_gibbs_gap(n, beta, tau, a), 4.0 * g.se);
  EXPECT_NEAR(vs.mean, expected_v(n, beta, tau, a, theta_star), 4.0 * vs.se);
}

TEST(OracleCovariance, MatchesMonteCarloOnDraws) {
  const Matrix a = (Matrix(2, 2) << 2.0, 0.3, 0.3, 1.0).finished();
  const auto data = generate_data(LocationDataParams{Eigen::Vector2d(0.5, -0.5)}, 15, 4);
  const LocationModel model(Eigen::Vector2d(0.5, -0.5), 0.8, 3.0, a);
  const auto post = location_posterior(data, model.beta(), model.tau());
  const auto draws = location_exact_draws(post, 200000, 8);
  const auto em = build_eval_matrix(data, draws, quadratic_loss_evaluator(a),
                                    location_score_evaluator(model.beta()));
  const auto corr = covariance_correction(em);
  const double exact = oracle_expected_covariance(data, model);
  EXPECT_NEAR(corr.v, exact, 0.03 * std::abs(exact));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double oi = oracle_observation_covariance(data.row(i), post, model.beta(), a);
    EXPECT_NEAR(corr.influence[static_cast<Eigen::Index>(i)], oi, 0.1 * std::abs(oi) + 1e-3);
  }
}

TEST(OracleCovariance, ModifiedScoreMatchesMonteCarlo) {
  const Matrix a = (Matrix(2, 2) << 1.0, 0.2, 0.2, 0.5).finished();
  const double beta = 1.0;
  const std::size_t n = 12;
  const double tau = 1.0 / static_cast<double>(n);
  const auto data = generate_data(LocationDataParams{Eigen::Vector2d(4.0, -3.0)}, n, 6);
  const auto post = location_posterior(data, beta, tau);
  const auto draws = location_exact_draws(post, 400000, 7);
  const auto em = build_eval_matrix(data, draws, quadratic_loss_evaluator(a),
                                    modified_location_score_evaluator(beta, tau, n));
  const auto corr = covariance_correction(em);
  for (std::size_t i = 0; i < n; ++i) {
    const double oi = oracle_modified_observation_covariance(data.row(i), post, beta, tau, a);
    const auto row = static_cast<Eigen::Index>(i);
    const Eigen::ArrayXd nu = em.nu().row(row).transpose().array();
    const Eigen::ArrayXd sc = em.s().row(row).transpose().array();
    const Eigen::ArrayXd prod = (nu - nu.mean()) * (sc - sc.mean());
    const double se = std::sqrt((prod - prod.mean()).square().mean() / static_cast<double>(prod.size()));
    EXPECT_NEAR(corr.influence[row], oi, 4.0 * se) << "observation " << i;
  }
}

TEST(ModifiedScore, SubtractsSharedPrior) {
  const std::vector<double> x{1.0, 0.0};
  const std::vector<double> t{1.0, 2.0};
  EXPECT_DOUBLE_EQ(location_modified_score(x, t, 1.0, 0.5, 4), -2.0 - 5.0 / 4.0);
  const auto eval = modified_location_score_evaluator(1.0, 0.5, 4);
  EXPECT_DOUBLE_EQ(eval(x, t), location_modified_score(x, t, 1.0, 0.5, 4));
}

TEST(KumarExpectation, IdentityCase) {
  const Matrix i2 = Matrix::Identity(2, 2);
  EXPECT_DOUBLE_EQ(kumar_expectation(i2, i2), 8.0);
}

TEST(KumarExpectation, MatchesMonteCarlo) {
  Rng rng(2718);
  for (int trial = 0; trial < 3; ++trial) {
    const RowMatrix rb = testing::random_matrix(rng, 3, 3);
    const RowMatrix rc = testing::random_matrix(rng, 3, 3);
    const Matrix b = rb + rb.transpose();
    const Matrix c = rc.transpose() * rc;
    const int draws = 1000000;
    double sum = 0.0;
    double sumsq = 0.0;
    Eigen::Vector3d w;
    for (int k = 0; k < draws; ++k) {
      for (int j = 0; j < 3; ++j) w[j] = standard_normal(rng);
      const double val = w.dot(b * w) * w.dot(c * w);
      sum += val;
      sumsq += val * val;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sumsq / draws - mean * mean) / draws);
    const double exact = kumar_expectation(b, c);
    EXPECT_NEAR(mean, exact, std::max(0.01 * std::abs(exact), 4.0 * se)) << "trial " << trial;
  }
}

TEST(KumarExpectation, RejectsAsymmetricOrMismatched) {
  Matrix b(2, 2);
  b << 1.0, 2.0, 0.0, 1.0;
  EXPECT_THROW(kumar_expectation(b, Matrix::Identity(2, 2)), DomainError);
  EXPECT_THROW(kumar_expectation(Matrix::Identity(2, 2), Matrix::Identity(3, 3)), DimensionError);
}

}  // namespace
}  // namespace pcic
