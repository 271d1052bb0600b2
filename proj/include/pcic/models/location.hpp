#pragma once

// Gaussian location-shift model with a tempered quadratic score and an isotropic normal
// prior. The quasi-posterior is N(theta_hat, S I_d) with
//   theta_hat = a * mean(X),  a = n beta tau / (n beta tau + 1),  S = 1 / (n beta + 1/tau),
// and every PCIC-related quantity has a closed form used as ground truth.

#include <pcic/core.hpp>
#include <pcic/losses.hpp>
#include <pcic/random.hpp>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

namespace pcic {

namespace detail {

inline void require_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": matrix must be square");
  if (m.rows() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() >= 1e-12) {
    throw DomainError(std::string(what) + ": matrix must be symmetric");
  }
}

}  // namespace detail

class LocationModel {
 public:
  LocationModel(Vector theta_star, double beta, double tau, Matrix a)
      : theta_star_(std::move(theta_star)), beta_(beta), tau_(tau), a_(std::move(a)) {
    if (!(beta_ > 0.0) || !(tau_ > 0.0)) throw DomainError("LocationModel: beta and tau must be positive");
    detail::require_symmetric(a_, "LocationModel");
    if (a_.rows() != theta_star_.size()) throw DimensionError("LocationModel: A does not match theta*");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(a_, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0) throw DomainError("LocationModel: A must be positive definite");
  }

  const Vector& theta_star() const { return theta_star_; }
  double beta() const { return beta_; }
  double tau() const { return tau_; }
  const Matrix& loss_matrix() const { return a_; }
  std::size_t dim() const { return static_cast<std::size_t>(theta_star_.size()); }

 private:
  Vector theta_star_;
  double beta_;
  double tau_;
  Matrix a_;
};

struct LocationPosterior {
  Vector theta_hat;
  double s_scale = 0.0;   // posterior covariance is s_scale * I_d
  double a_factor = 0.0;  // shrinkage n beta tau / (n beta tau + 1)
  std::size_t n = 0;
};

inline double shrinkage_factor(std::size_t n, double beta, double tau) {
  const double nbt = static_cast<double>(n) * beta * tau;
  return nbt / (nbt + 1.0);
}

inline double posterior_scale(std::size_t n, double beta, double tau) {
  return 1.0 / (static_cast<double>(n) * beta + 1.0 / tau);
}

inline LocationPosterior location_posterior(const Dataset& data, double beta, double tau) {
  if (!(beta > 0.0) || !(tau > 0.0)) throw DomainError("location_posterior: beta and tau must be positive");
  LocationPosterior post;
  post.n = data.size();
  post.a_factor = shrinkage_factor(post.n, beta, tau);
  post.s_scale = posterior_scale(post.n, beta, tau);
  post.theta_hat = post.a_factor * data.rows().colwise().mean().transpose();
  return post;
}

inline PosteriorDraws location_exact_draws(const LocationPosterior& post, std::size_t m,
                                           std::uint64_t seed) {
  if (m < 2) throw DimensionError("location_exact_draws: M must be at least 2");
  Rng rng(seed);
  const auto d = post.theta_hat.size();
  const double sd = std::sqrt(post.s_scale);
  RowMatrix draws(static_cast<Eigen::Index>(m), d);
  for (Eigen::Index k = 0; k < draws.rows(); ++k) {
    for (Eigen::Index j = 0; j < d; ++j) draws(k, j) = post.theta_hat[j] + sd * standard_normal(rng);
  }
  return PosteriorDraws(std::move(draws), Provenance{"location-exact", seed, 0, 1, std::nullopt, {}});
}

/// E[G_G,n] - E[E_G,n] = (2/n) a tr(A).
inline double oracle_gibbs_gap(std::size_t n, double beta, double tau, const Matrix& a) {
  return 2.0 / static_cast<double>(n) * shrinkage_factor(n, beta, tau) * a.trace();
}

/// Cov_pos[nu(x, theta), s(x, theta)] for one observation:
///   -(beta/2) { 4 S (x - theta_hat)^T A (x - theta_hat) + 2 S^2 tr(A) }.
inline double oracle_observation_covariance(std::span<const double> x, const LocationPosterior& post,
                                            double beta, const Matrix& a) {
  const double q = quadratic_loss(x, as_span(post.theta_hat), a);
  const double s = post.s_scale;
  return -0.5 * beta * (4.0 * s * q + 2.0 * s * s * a.trace());
}

/// Mean posterior covariance over the realized data (the exact value of V).
inline double oracle_expected_covariance(const Dataset& data, const LocationModel& model) {
  const auto post = location_posterior(data, model.beta(), model.tau());
  const double n = static_cast<double>(data.size());
  double quad = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    quad += quadratic_loss(data.row(i), as_span(post.theta_hat), model.loss_matrix());
  }
  const double tr = model.loss_matrix().trace();
  return -2.0 / n * post.a_factor * quad / n - model.beta() * tr * post.s_scale * post.s_scale;
}

/// beta tr(A) S^2 + (a^3 - 2 a^2) 2 tr(A) / n^2.
inline double oracle_rem(std::size_t n, double beta, double tau, const Matrix& a) {
  const double af = shrinkage_factor(n, beta, tau);
  const double s = posterior_scale(n, beta, tau);
  const double nn = static_cast<double>(n);
  return beta * a.trace() * s * s + (af * af * af - 2.0 * af * af) * 2.0 * a.trace() / (nn * nn);
}

/// Strong-prior bias (2/n) a theta*^T A theta* / (n beta tau + 1)^2. Together with oracle_rem
/// it closes E[G] - E[E] + E[V] = -(bias + rem), i.e. E[PCIC_G] - E[G] = bias + rem.
inline double oracle_bias_term(const LocationModel& model, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double af = shrinkage_factor(n, model.beta(), model.tau());
  const double denom = nn * model.beta() * model.tau() + 1.0;
  const Vector& t = model.theta_star();
  return 2.0 / nn * af * t.dot(model.loss_matrix() * t) / (denom * denom);
}

/// s'(x, theta) = s(x, theta) - ||theta||^2 / (2 tau n): the log-prior spread over observations.
inline double location_modified_score(std::span<const double> x, std::span<const double> theta,
                                      double beta, double tau, std::size_t n) {
  double norm2 = 0.0;
  for (double t : theta) norm2 += t * t;
  return location_score(x, theta, beta) - norm2 / (2.0 * tau * static_cast<double>(n));
}

/// Cov_pos[nu(x, theta), s'(x, theta)] for the modified score. The extra term is
/// Cov[nu, ||theta||^2] = -4 S (x - theta_hat)^T A theta_hat + 2 S^2 tr(A), scaled by -1/(2 tau n).
inline double oracle_modified_observation_covariance(std::span<const double> x, const LocationPosterior& post,
                                                     double beta, double tau, const Matrix& a) {
  Vector centered(post.theta_hat.size());
  for (Eigen::Index j = 0; j < centered.size(); ++j) centered[j] = x[static_cast<std::size_t>(j)] - post.theta_hat[j];
  const double s = post.s_scale;
  const double prior_cov = -4.0 * s * centered.dot(a * post.theta_hat) + 2.0 * s * s * a.trace();
  return oracle_observation_covariance(x, post, beta, a) - prior_cov / (2.0 * tau * static_cast<double>(post.n));
}

/// E[(w^T B w)(w^T C w)] = 2 tr(BC) + tr(B) tr(C) for w ~ N(0, I_d).
inline double kumar_expectation(const Matrix& b, const Matrix& c) {
  detail::require_symmetric(b, "kumar_expectation");
  detail::require_symmetric(c, "kumar_expectation");
  if (b.rows() != c.rows()) throw DimensionError("kumar_expectation: dimension mismatch");
  return 2.0 * (b * c).trace() + b.trace() * c.trace();
}

inline auto quadratic_loss_evaluator(Matrix a) {
  return [a = std::move(a)](std::span<const double> x, std::span<const double> theta) {
    return quadratic_loss(x, theta, a);
  };
}

inline auto location_score_evaluator(double beta) {
  return [beta](std::span<const double> x, std::span<const double> theta) {
    return location_score(x, theta, beta);
  };
}

inline auto modified_location_score_evaluator(double beta, double tau, std::size_t n) {
  return [=](std::span<const double> x, std::span<const double> theta) {
    return location_modified_score(x, theta, beta, tau, n);
  };
}

}  // namespace pcic
