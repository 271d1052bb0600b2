#pragma once

#include <pcic/core.hpp>

#include <cmath>
#include <span>
#include <string>
#include <string_view>

namespace pcic {

/// (x - theta)^T A (x - theta).
inline double quadratic_loss(std::span<const double> x, std::span<const double> theta,
                             const Matrix& a) {
  const std::size_t d = x.size();
  if (theta.size() != d || static_cast<std::size_t>(a.rows()) != d ||
      static_cast<std::size_t>(a.cols()) != d) {
    throw DimensionError("quadratic_loss: dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < d; ++r) {
    const double dr = x[r] - theta[r];
    double inner = 0.0;
    for (std::size_t c = 0; c < d; ++c) inner += a(r, c) * (x[c] - theta[c]);
    total += dr * inner;
  }
  return total;
}

/// -(beta/2) ||x - theta||^2
inline double location_score(std::span<const double> x, std::span<const double> theta,
                             double beta) {
  if (theta.size() != x.size()) throw DimensionError("location_score: dimension mismatch");
  double sq = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) sq += (x[j] - theta[j]) * (x[j] - theta[j]);
  return -0.5 * beta * sq;
}

enum class ClassificationLoss { brier, misclass, spherical };
enum class RegressionLoss { l2, scaled_l1 };

inline std::string_view to_string(ClassificationLoss kind) {
  switch (kind) {
    case ClassificationLoss::brier: return "brier";
    case ClassificationLoss::misclass: return "misclass";
    case ClassificationLoss::spherical: return "spherical";
  }
  return "unknown";
}

inline std::string_view to_string(RegressionLoss kind) {
  return kind == RegressionLoss::l2 ? "l2" : "scaled_l1";
}

inline ClassificationLoss parse_classification_loss(std::string_view name) {
  if (name == "brier") return ClassificationLoss::brier;
  if (name == "misclass") return ClassificationLoss::misclass;
  if (name == "spherical") return ClassificationLoss::spherical;
  throw DomainError("unknown classification loss '" + std::string(name) + "'");
}

inline RegressionLoss parse_regression_loss(std::string_view name) {
  if (name == "l2") return RegressionLoss::l2;
  if (name == "scaled_l1") return RegressionLoss::scaled_l1;
  throw DomainError("unknown regression loss '" + std::string(name) + "'");
}

/// Loss of predicting probability p for a binary outcome x.
inline double classification_loss(ClassificationLoss kind, double x, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("classification_loss: p outside [0,1]");
  switch (kind) {
    case ClassificationLoss::brier:
      return (x - p) * (x - p);
    case ClassificationLoss::misclass:
      // A tie at p = 1/2 counts as neither correct class.
      return ((x == 1.0 && p > 0.5) || (x == 0.0 && p < 0.5)) ? -1.0 : 0.0;
    case ClassificationLoss::spherical: {
      // p^2 + (1-p)^2 >= 1/2 on [0,1], so the denominator never vanishes.
      const double norm = std::sqrt(p * p + (1.0 - p) * (1.0 - p));
      return -(x * p + (1.0 - x) * (1.0 - p)) / norm;
    }
  }
  return 0.0;
}

inline double regression_loss(RegressionLoss kind, double y, double x, double beta0,
                              double beta1, double sigma) {
  const double residual = y - beta0 - x * beta1;
  if (kind == RegressionLoss::l2) return residual * residual;
  if (!(sigma > 0.0)) throw DomainError("regression_loss: scaled_l1 requires sigma > 0");
  return std::abs(residual) / sigma;
}

}  // namespace pcic
