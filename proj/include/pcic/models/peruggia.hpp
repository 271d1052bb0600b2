#pragma once

// Simple linear regression y_i = b0 + x_i b1 + sigma eps_i under the hierarchical prior
//   (b0, b1) | Sigma ~ N(0, Sigma),  sigma^2 ~ IG(1, 1),  Sigma ~ IW(4 I_2, 4),
// sampled by Gibbs with the conjugate full conditionals. The inverse-Wishart density is
// proportional to |Sigma|^{-(df + 3)/2} exp(-tr(Psi Sigma^{-1}) / 2).
//
// Draws are stored as theta = (b0, b1, sigma^2, Sigma_00, Sigma_01, Sigma_11).
// Dataset rows use the layout [x, y].

#include <pcic/core.hpp>
#include <pcic/losses.hpp>
#include <pcic/random.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace pcic {

inline constexpr double kPriorSigmaShape = 1.0;
inline constexpr double kPriorSigmaScale = 1.0;
inline constexpr double kPriorWishartDf = 4.0;
inline constexpr double kPriorWishartScale = 4.0;  // Psi = 4 I_2

/// Covariates 0.01 i for i < n and R for the last observation.
inline Vector peruggia_design(std::size_t n, double r) {
  Vector x(static_cast<Eigen::Index>(n));
  for (std::size_t i = 1; i < n; ++i) x[static_cast<Eigen::Index>(i - 1)] = 0.01 * static_cast<double>(i);
  if (n > 0) x[static_cast<Eigen::Index>(n - 1)] = r;
  return x;
}

struct PeruggiaRegression {
  Vector x;
  Vector y;
  double r = 0.0;

  PeruggiaRegression(Vector y_values, double influential)
      : x(peruggia_design(static_cast<std::size_t>(y_values.size()), influential)),
        y(std::move(y_values)),
        r(influential) {}

  Dataset dataset() const {
    RowMatrix rows(x.size(), 2);
    rows.col(0) = x;
    rows.col(1) = y;
    return Dataset(std::move(rows), {"x", "y"});
  }
};

/// Reorders a dataset with `x` and `y` columns into [x, y].
inline Dataset canonical_regression_dataset(const Dataset& data) {
  const auto xi = data.column_index("x");
  const auto yi = data.column_index("y");
  if (!xi || !yi) throw DomainError("regression data requires 'x' and 'y' columns");
  RowMatrix rows(data.rows().rows(), 2);
  rows.col(0) = data.rows().col(static_cast<Eigen::Index>(*xi));
  rows.col(1) = data.rows().col(static_cast<Eigen::Index>(*yi));
  return Dataset(std::move(rows), {"x", "y"});
}

namespace detail {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Factor `precision`, adding 1e-10 jitter on failure; gives up after three retries.
inline Eigen::LLT<Mat2> factor_with_jitter(Mat2 precision, const char* what) {
  for (int attempt = 0; attempt <= 3; ++attempt) {
    Eigen::LLT<Mat2> llt(precision);
    if (llt.info() == Eigen::Success) return llt;
    precision.diagonal().array() += 1e-10;
  }
  throw SamplerError(std::string("regression_gibbs: ") + what + " is not positive definite");
}

// Sigma ~ IW(psi, df) via the Bartlett decomposition of W = Sigma^{-1} ~ Wishart(df, psi^{-1}).
inline Mat2 sample_inverse_wishart(Rng& rng, const Mat2& psi, double df) {
  const auto psi_llt = factor_with_jitter(psi, "inverse-Wishart scale");
  const Mat2 psi_inv = psi_llt.solve(Mat2::Identity());
  const Mat2 l = factor_with_jitter(psi_inv, "Wishart scale").matrixL();
  Mat2 a = Mat2::Zero();
  a(0, 0) = std::sqrt(std::chi_squared_distribution<double>(df)(rng));
  a(1, 1) = std::sqrt(std::chi_squared_distribution<double>(df - 1.0)(rng));
  a(1, 0) = standard_normal(rng);
  const Mat2 la = l * a;
  const Mat2 w = la * la.transpose();
  const auto w_llt = factor_with_jitter(w, "Wishart draw");
  Mat2 sigma = w_llt.solve(Mat2::Identity());
  sigma = 0.5 * (sigma + sigma.transpose());
  return sigma;
}

}  // namespace detail

/// Gibbs sampler for arbitrary (x, y), including the empty (prior-only) case.
inline PosteriorDraws regression_gibbs(const Vector& x, const Vector& y, std::size_t m,
                                       std::size_t burn_in, std::size_t thin, std::uint64_t seed) {
  using detail::Mat2;
  using detail::Vec2;
  if (x.size() != y.size()) throw DimensionError("regression_gibbs: x and y lengths differ");
  if (m < 1 || thin < 1) throw DomainError("regression_gibbs: need m >= 1 and thin >= 1");

  const double n = static_cast<double>(x.size());
  Mat2 xtx;
  xtx << n, x.sum(), x.sum(), x.squaredNorm();
  const Vec2 xty(y.sum(), x.dot(y));
  const Mat2 psi = kPriorWishartScale * Mat2::Identity();

  Rng rng(seed);
  Vec2 coef = Vec2::Zero();
  double sigma2 = 1.0;
  Mat2 sigma_prior = Mat2::Identity();

  RowMatrix draws(static_cast<Eigen::Index>(m), 6);
  const std::size_t steps = burn_in + m * thin;
  std::size_t row = 0;
  for (std::size_t t = 1; t <= steps; ++t) {
    // coefficients | sigma^2, Sigma
    const Mat2 prior_precision = detail::factor_with_jitter(sigma_prior, "prior covariance")
                                     .solve(Mat2::Identity());
    const Mat2 precision = prior_precision + xtx / sigma2;
    const auto llt = detail::factor_with_jitter(precision, "coefficient precision");
    const Vec2 mean = llt.solve(xty / sigma2);
    const Vec2 z(standard_normal(rng), standard_normal(rng));
    coef = mean + llt.matrixU().solve(z);

    // sigma^2 | coefficients
    const Eigen::ArrayXd resid = y.array() - coef[0] - coef[1] * x.array();
    sigma2 = inverse_gamma(rng, kPriorSigmaShape + 0.5 * n,
                           kPriorSigmaScale + 0.5 * resid.square().sum());

    // Sigma | coefficients
    sigma_prior = detail::sample_inverse_wishart(rng, psi + coef * coef.transpose(),
                                                 kPriorWishartDf + 1.0);

    if (!coef.allFinite() || !std::isfinite(sigma2) || !sigma_prior.allFinite()) {
      throw SamplerError("regression_gibbs: non-finite state at step " + std::to_string(t));
    }
    if (t > burn_in && (t - burn_in) % thin == 0) {
      auto out = draws.row(static_cast<Eigen::Index>(row++));
      out << coef[0], coef[1], sigma2, sigma_prior(0, 0), sigma_prior(0, 1), sigma_prior(1, 1);
    }
  }
  return PosteriorDraws(std::move(draws), Provenance{"regression-gibbs", seed, burn_in, thin, std::nullopt, {}});
}

inline PosteriorDraws peruggia_gibbs(const PeruggiaRegression& data, std::size_t m,
                                     std::size_t burn_in, std::size_t thin, std::uint64_t seed) {
  if (data.y.size() < 3) throw DimensionError("peruggia_gibbs: need at least three observations");
  return regression_gibbs(data.x, data.y, m, burn_in, thin, seed);
}

/// Sampler for canonical [x, y] datasets.
inline PosteriorDraws regression_gibbs(const Dataset& canonical, std::size_t m, std::size_t burn_in,
                                       std::size_t thin, std::uint64_t seed) {
  return regression_gibbs(canonical.rows().col(0), canonical.rows().col(1), m, burn_in, thin, seed);
}

inline auto regression_loss_evaluator(RegressionLoss kind) {
  return [kind](std::span<const double> row, std::span<const double> theta) {
    return regression_loss(kind, row[1], row[0], theta[0], theta[1], std::sqrt(theta[2]));
  };
}

/// Gaussian log-likelihood log N(y | b0 + x b1, sigma^2).
inline auto regression_loglik_evaluator() {
  return [](std::span<const double> row, std::span<const double> theta) {
    const double resid = row[1] - theta[0] - theta[1] * row[0];
    return -0.5 * std::log(2.0 * std::numbers::pi * theta[2]) - 0.5 * resid * resid / theta[2];
  };
}

}  // namespace pcic
