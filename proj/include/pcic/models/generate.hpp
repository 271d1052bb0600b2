#pragma once

// Seeded synthetic data for the three studies.

#include <pcic/core.hpp>
#include <pcic/models/logistic.hpp>
#include <pcic/models/peruggia.hpp>
#include <pcic/random.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace pcic {

enum class NoiseKind { gaussian, laplace };

inline NoiseKind parse_noise(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "laplace") return NoiseKind::laplace;
  throw DomainError("unknown noise kind '" + name + "'");
}

/// X_i = theta* + eps_i with mean-zero, identity-covariance errors.
struct LocationDataParams {
  Vector theta_star;
  NoiseKind noise = NoiseKind::gaussian;
};

/// Standard-normal covariates, labels ~ Bernoulli(sig(theta*_0 + x theta*_{1:})).
struct LogisticDataParams {
  Vector theta_star;
};

/// Peruggia design with the influential covariate R at the last index.
struct OutlierDataParams {
  double r = 6.0;
  double beta0 = 0.0;
  double beta1 = 1.0;
  double sigma = 1.0;
};

using DataParams = std::variant<LocationDataParams, LogisticDataParams, OutlierDataParams>;

namespace detail {

inline Dataset generate(const LocationDataParams& p, std::size_t n, Rng& rng) {
  const auto d = p.theta_star.size();
  RowMatrix rows(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double eps = p.noise == NoiseKind::gaussian ? standard_normal(rng) : unit_laplace(rng);
      rows(i, j) = p.theta_star[j] + eps;
    }
  }
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < d; ++j) names.push_back("x" + std::to_string(j + 1));
  return Dataset(std::move(rows), std::move(names));
}

inline Dataset generate(const LogisticDataParams& p, std::size_t n, Rng& rng) {
  const auto width = p.theta_star.size();
  if (width < 1) throw DimensionError("logistic generator needs an intercept");
  RowMatrix rows(static_cast<Eigen::Index>(n), width);
  std::vector<std::string> names{"label"};
  for (Eigen::Index j = 1; j < width; ++j) names.push_back("x" + std::to_string(j));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double z = p.theta_star[0];
    for (Eigen::Index j = 1; j < width; ++j) {
      rows(i, j) = standard_normal(rng);
      z += p.theta_star[j] * rows(i, j);
    }
    rows(i, 0) = uniform01(rng) < sigmoid(z) ? 1.0 : 0.0;
  }
  return Dataset(std::move(rows), std::move(names));
}

inline Dataset generate(const OutlierDataParams& p, std::size_t n, Rng& rng) {
  const Vector x = peruggia_design(n, p.r);
  RowMatrix rows(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    rows(i, 0) = x[i];
    rows(i, 1) = p.beta0 + x[i] * p.beta1 + p.sigma * standard_normal(rng);
  }
  return Dataset(std::move(rows), {"x", "y"});
}

}  // namespace detail

inline Dataset generate_data(const DataParams& params, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw DimensionError("generate_data: n must be positive");
  Rng rng(seed);
  return std::visit([&](const auto& p) { return detail::generate(p, n, rng); }, params);
}

/// Held-out regression points: covariates resampled uniformly from the training design,
/// responses drawn fresh from the true model.
inline Dataset generate_design_test_set(const Dataset& training, const OutlierDataParams& p,
                                        std::size_t n_test, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, training.size() - 1);
  RowMatrix rows(static_cast<Eigen::Index>(n_test), 2);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double x = training.row(pick(rng))[0];
    rows(i, 0) = x;
    rows(i, 1) = p.beta0 + x * p.beta1 + p.sigma * standard_normal(rng);
  }
  return Dataset(std::move(rows), {"x", "y"});
}

}  // namespace pcic
