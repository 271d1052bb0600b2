#pragma once

// Risk estimators over an EvalMatrix: empirical errors, the posterior covariance
// correction, PCIC (Gibbs, plugin, weighted), WAIC_2, IS-CV, exact LOOCV and the
// third mixed-moment diagnostic.
//
// All variances and covariances divide by M (population form).

#include <pcic/core.hpp>
#include <pcic/stats.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pcic {

namespace detail {

inline void require_min_draws(const EvalMatrix& em, std::size_t min_draws, const char* what) {
  if (em.m() < min_draws) {
    throw DimensionError(std::string(what) + ": requires at least " + std::to_string(min_draws) +
                         " draws, got " + std::to_string(em.m()));
  }
}

// (1/M) sum_k (a_k - mean a)(b_k - mean b)
template <class RowA, class RowB>
double row_covariance(const RowA& a, const RowB& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  return ((a.array() - ma) * (b.array() - mb)).mean();
}

// (1/M) sum_k (a_k - mean a)(b_k - mean b)^2
template <class RowA, class RowB>
double row_mixed_third(const RowA& a, const RowB& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  return ((a.array() - ma) * (b.array() - mb).square()).mean();
}

inline Vector kappa3_unchecked(const EvalMatrix& em) {
  Vector out(static_cast<Eigen::Index>(em.n()));
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = row_mixed_third(em.nu().row(i), em.s().row(i));
  }
  return out;
}

}  // namespace detail

/// T_G: grand mean of the loss matrix.
inline double empirical_gibbs(const EvalMatrix& em) { return em.nu().mean(); }

struct CovarianceCorrection {
  double v = 0.0;
  Vector influence;  // Cov_pos[nu(X_i, theta), s(X_i, theta)] per observation
};

inline CovarianceCorrection covariance_correction(const EvalMatrix& em) {
  detail::require_min_draws(em, 2, "covariance_correction");
  CovarianceCorrection out;
  out.influence.resize(static_cast<Eigen::Index>(em.n()));
  for (Eigen::Index i = 0; i < out.influence.size(); ++i) {
    out.influence[i] = detail::row_covariance(em.nu().row(i), em.s().row(i));
  }
  out.v = out.influence.mean();
  return out;
}

/// Third mixed central moment E[(nu - E nu)(s - E s)^2] per observation, evaluated at the
/// available (unit-weight) posterior.
inline Vector kappa3_diagnostic(const EvalMatrix& em) {
  detail::require_min_draws(em, 3, "kappa3_diagnostic");
  return detail::kappa3_unchecked(em);
}

/// Bound on |LOOCV - PCIC_G| from the diagnostic: (1/2n) sum_i |kappa3_i|.
inline double kappa3_bound(const Vector& kappa3) {
  return kappa3.cwiseAbs().sum() / (2.0 * static_cast<double>(kappa3.size()));
}

/// Standard error of `statistic` from `batches` contiguous column batches. Returns nullopt
/// when a batch would hold fewer than two draws.
template <class Statistic>
std::optional<double> batch_standard_error(const EvalMatrix& em, Statistic&& statistic,
                                           std::size_t batches = 10) {
  if (batches < 2 || em.m() < 2 * batches) return std::nullopt;
  std::vector<double> values(batches);
  const std::size_t m = em.m();
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t first = b * m / batches;
    const std::size_t last = (b + 1) * m / batches;
    values[b] = statistic(em.columns(first, last - first));
  }
  return summarize(values).se;
}

namespace detail {

inline RiskReport base_report(const EvalMatrix& em) {
  auto correction = covariance_correction(em);
  RiskReport report;
  report.empirical_gibbs = empirical_gibbs(em);
  report.correction_v = correction.v;
  report.pcic_gibbs = report.empirical_gibbs - correction.v;
  report.influence = std::move(correction.influence);
  report.kappa3 = kappa3_unchecked(em);
  report.mc_se = batch_standard_error(em, [](const EvalMatrix& batch) {
    return empirical_gibbs(batch) - covariance_correction(batch).v;
  });
  return report;
}

}  // namespace detail

/// PCIC_G = T_G - V.
inline RiskReport pcic_gibbs(const EvalMatrix& em) { return detail::base_report(em); }

/// PCIC_P = T_P - V, where plugin_empirical is T_P computed at the posterior mean of the
/// draws that produced `em`.
inline RiskReport pcic_plugin(const EvalMatrix& em, double plugin_empirical) {
  RiskReport report = detail::base_report(em);
  report.empirical_plugin = plugin_empirical;
  report.pcic_plugin = plugin_empirical - report.correction_v;
  return report;
}

/// T_P = (1/n) sum_i loss(X_i, posterior mean).
template <Evaluator Loss>
double plugin_empirical(const Dataset& data, const PosteriorDraws& draws, Loss&& loss) {
  const Vector mean = posterior_mean(draws);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = static_cast<double>(loss(data.row(i), as_span(mean)));
    if (!std::isfinite(v)) throw EvaluationError(i, 0, "plugin loss");
    total += v;
  }
  return total / static_cast<double>(data.size());
}

inline double pcic_weighted(const EvalMatrix& em, const ObservationWeights& weights) {
  if (weights.size() != em.n()) {
    throw DimensionError("pcic_weighted: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(em.n()) + " observations");
  }
  const auto correction = covariance_correction(em);
  const Vector row_means = em.nu().rowwise().mean();
  const Vector& w = weights.values();
  const double n = static_cast<double>(em.n());
  return w.dot(row_means) / n - w.dot(correction.influence) / n;
}

/// WAIC_2 = -mean_i E[log p] + (beta / n) sum_i V[log p].
inline double waic2(const RowMatrix& loglik, double beta) {
  if (!(beta > 0.0)) throw DomainError("waic2: beta must be positive");
  if (loglik.rows() < 1 || loglik.cols() < 2) throw DimensionError("waic2: need n >= 1, M >= 2");
  if (!loglik.allFinite()) throw DomainError("waic2: non-finite log-likelihood");
  double variance_sum = 0.0;
  for (Eigen::Index i = 0; i < loglik.rows(); ++i) {
    variance_sum += detail::row_covariance(loglik.row(i), loglik.row(i));
  }
  const double n = static_cast<double>(loglik.rows());
  return -loglik.mean() + beta * variance_sum / n;
}

/// Self-normalized importance-sampling LOO estimate with case-deletion weights
/// u_ik proportional to exp(-s_ik), shifted by the row minimum of s.
inline double iscv_gibbs(const EvalMatrix& em) {
  detail::require_min_draws(em, 2, "iscv_gibbs");
  double total = 0.0;
  for (Eigen::Index i = 0; i < em.nu().rows(); ++i) {
    const auto s = em.s().row(i);
    const auto nu = em.nu().row(i);
    const double shift = s.minCoeff();
    const Eigen::ArrayXd u = (shift - s.array()).exp().transpose();
    const double denom = u.sum();
    if (!(denom > 0.0) || !std::isfinite(denom)) {
      throw SamplerError("iscv_gibbs: degenerate importance weights for observation " +
                         std::to_string(i));
    }
    total += (nu.array().transpose() * u).sum() / denom;
  }
  return total / static_cast<double>(em.n());
}

struct LoocvEstimate {
  double value = 0.0;
  /// Monte Carlo standard error assuming independent draws within each fold.
  double mc_se = 0.0;
  std::vector<double> fold_values;
};

/// Brute-force leave-one-out: refits via `sampler_factory(sub_dataset, seed + i)` for every
/// fold i and averages the fold posterior mean of loss(X_i, theta).
template <class SamplerFactory, Evaluator Loss>
LoocvEstimate exact_loocv(const Dataset& data, SamplerFactory&& sampler_factory, Loss&& loss,
                          std::uint64_t seed) {
  const std::size_t n = data.size();
  if (n < 2) throw DimensionError("exact_loocv: need at least two observations");
  LoocvEstimate out;
  out.fold_values.resize(n);
  double variance_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    PosteriorDraws draws;
    try {
      draws = sampler_factory(data.without(i), seed + i);
    } catch (const std::exception& e) {
      throw SamplerError("exact_loocv: sampler failed on fold " + std::to_string(i) + ": " +
                         e.what());
    }
    const std::size_t m = draws.size();
    std::vector<double> values(m);
    for (std::size_t k = 0; k < m; ++k) {
      values[k] = static_cast<double>(loss(data.row(i), draws.draw(k)));
      if (!std::isfinite(values[k])) throw EvaluationError(i, k, "loss");
    }
    const auto summary = summarize(values);
    out.fold_values[i] = summary.mean;
    if (m > 1) variance_total += summary.sd * summary.sd / static_cast<double>(m);
  }
  double total = 0.0;
  for (double v : out.fold_values) total += v;
  out.value = total / static_cast<double>(n);
  out.mc_se = std::sqrt(variance_total) / static_cast<double>(n);
  return out;
}

struct TestErrors {
  double gibbs = 0.0;
  std::optional<double> plugin;
};

/// Generalization errors measured on held-out data; test_em must use the training draws.
inline TestErrors test_errors(const EvalMatrix& test_em,
                              std::optional<double> plugin_test_empirical = std::nullopt) {
  return {empirical_gibbs(test_em), plugin_test_empirical};
}

}  // namespace pcic
