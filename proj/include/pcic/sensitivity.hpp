#pragma once

// Case-weight sensitivity: expectations under the weighted posterior pi_w obtained by
// reweighting the unit-weight draws, finite-difference checks of the derivative identity
//   d^k/dw_i^k E_w[nu_i] = E_w[(nu_i - E_w nu_i)(s_i - E_w s_i)^k],  k = 1, 2,
// and the per-observation influence measures.

#include <pcic/core.hpp>
#include <pcic/estimators.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>

namespace pcic {

struct WeightedMean {
  double value = 0.0;
  double ess = 0.0;
  bool degenerate = false;  // ess < 10
};

inline constexpr double kDegenerateEss = 10.0;
inline constexpr double kMinCheckEss = 100.0;

/// E_w[values] where observation i carries weight w_i and all others weight one:
/// self-normalized weights exp((w_i - 1) s_ik) relative to the unit-weight draws.
inline WeightedMean weighted_expectation(const EvalMatrix& em, std::size_t i, double w_i,
                                         std::span<const double> values) {
  if (i >= em.n()) throw DimensionError("weighted_expectation: observation index out of range");
  if (values.size() != em.m()) {
    throw DimensionError("weighted_expectation: values must have one entry per draw");
  }
  if (!(w_i >= 0.0 && w_i <= 1.0)) throw DomainError("weighted_expectation: w_i must lie in [0,1]");

  const auto s = em.s().row(static_cast<Eigen::Index>(i));
  const Eigen::Map<const Eigen::ArrayXd> v(values.data(), static_cast<Eigen::Index>(values.size()));
  const double center = v.mean();

  WeightedMean out;
  if (w_i == 1.0) {
    out.value = center;
    out.ess = static_cast<double>(em.m());
    return out;
  }
  const double shift = s.minCoeff();
  const Eigen::ArrayXd u = ((w_i - 1.0) * (s.array() - shift)).exp().transpose();
  const double sum_u = u.sum();
  out.value = center + ((v - center) * u).sum() / sum_u;
  out.ess = sum_u * sum_u / u.square().sum();
  out.degenerate = out.ess < kDegenerateEss;
  return out;
}

/// E[(nu_i - E nu_i)(s_i - E s_i)^k] at unit weights.
inline double local_sensitivity(const EvalMatrix& em, std::size_t i, int order) {
  if (order != 1 && order != 2) throw DomainError("local_sensitivity: order must be 1 or 2");
  if (i >= em.n()) throw DimensionError("local_sensitivity: observation index out of range");
  detail::require_min_draws(em, static_cast<std::size_t>(order) + 1, "local_sensitivity");
  const auto row = static_cast<Eigen::Index>(i);
  return order == 1 ? detail::row_covariance(em.nu().row(row), em.s().row(row))
                    : detail::row_mixed_third(em.nu().row(row), em.s().row(row));
}

struct SensitivityCheck {
  std::size_t observation_index = 0;
  int order = 1;
  double analytic = 0.0;
  double numeric = 0.0;
  double step = 0.0;
  double rel_error = 0.0;
  double min_ess = 0.0;
  std::optional<std::string> warning;
};

inline constexpr double kRelErrorFloor = 1e-12;

/// Compares local_sensitivity against a one-sided finite difference of
/// g(w) = E_w[nu_i] on nodes {1, 1-h, 1-2h} (weights cannot exceed one).
inline SensitivityCheck finite_difference_check(const EvalMatrix& em, std::size_t i, int order,
                                                double h) {
  if (!(h > 0.0 && h < 0.5)) throw DomainError("finite_difference_check: step must lie in (0, 0.5)");
  const auto nu = em.nu().row(static_cast<Eigen::Index>(i));
  const std::span<const double> values(nu.data(), em.m());

  const auto g0 = weighted_expectation(em, i, 1.0, values);
  const auto g1 = weighted_expectation(em, i, 1.0 - h, values);
  const auto g2 = weighted_expectation(em, i, 1.0 - 2.0 * h, values);
  if (g1.degenerate || g2.degenerate) {
    throw SamplerError("finite_difference_check: degenerate reweighting for observation " +
                       std::to_string(i));
  }

  SensitivityCheck out;
  out.observation_index = i;
  out.order = order;
  out.step = h;
  out.analytic = local_sensitivity(em, i, order);
  // Backward stencils in w: second-order accurate for k=1, first-order for k=2.
  out.numeric = order == 1 ? (3.0 * g0.value - 4.0 * g1.value + g2.value) / (2.0 * h)
                           : (g0.value - 2.0 * g1.value + g2.value) / (h * h);
  out.rel_error = std::abs(out.analytic - out.numeric) /
                  std::max(std::abs(out.analytic), kRelErrorFloor);
  out.min_ess = std::min(g1.ess, g2.ess);
  if (out.min_ess < kMinCheckEss) {
    out.warning = "effective sample size " + std::to_string(out.min_ess) + " below " +
                  std::to_string(kMinCheckEss);
  }
  return out;
}

struct InfluenceMeasure {
  Vector raw;                        // M_{nu,i}
  std::optional<Vector> normalized;  // M_{nu,i} / sum_j M_{nu,j}, absent when the sum is zero
};

inline InfluenceMeasure influence_measure(const EvalMatrix& em) {
  InfluenceMeasure out;
  out.raw = covariance_correction(em).influence;
  const double total = out.raw.sum();
  if (total != 0.0) out.normalized = out.raw / total;
  return out;
}

/// I^(2)_i = V_pos[log p(X_i | theta)] per observation.
inline Vector curvature_i2(const RowMatrix& loglik) {
  if (loglik.cols() < 2) throw DimensionError("curvature_i2: need at least two draws");
  Vector out(loglik.rows());
  for (Eigen::Index i = 0; i < loglik.rows(); ++i) {
    out[i] = detail::row_covariance(loglik.row(i), loglik.row(i));
  }
  return out;
}

}  // namespace pcic
