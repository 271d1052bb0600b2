#pragma once

// Tempered logistic-regression quasi-posterior with a standard normal prior:
//   log pi(theta) = beta * sum_i [y_i log sig(x_i theta) + (1 - y_i) log(1 - sig(x_i theta))]
//                   - theta^T theta / 2 + const.
// Dataset rows use the layout [label, x_1, ..., x_q]; an intercept is implicit, so
// theta has q + 1 entries with theta[0] the intercept.

#include <pcic/core.hpp>
#include <pcic/losses.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace pcic {

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

inline double log_sigmoid(double z) { return -softplus(-z); }

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// Reorders a dataset with a `label` column into [label, covariates...].
inline Dataset canonical_logistic_dataset(const Dataset& data) {
  const auto label = data.column_index("label");
  if (!label) throw DomainError("classification data requires a 'label' column");
  std::vector<std::string> names{"label"};
  RowMatrix rows(data.rows().rows(), data.rows().cols());
  rows.col(0) = data.rows().col(static_cast<Eigen::Index>(*label));
  Eigen::Index out = 1;
  for (std::size_t j = 0; j < data.width(); ++j) {
    if (j == *label) continue;
    rows.col(out++) = data.rows().col(static_cast<Eigen::Index>(j));
    names.push_back(data.columns()[j]);
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (rows(i, 0) != 0.0 && rows(i, 0) != 1.0) {
      throw DomainError("label on row " + std::to_string(i) + " is not 0 or 1");
    }
  }
  return Dataset(std::move(rows), std::move(names));
}

class LogisticQuasiModel {
 public:
  LogisticQuasiModel(double beta, RowMatrix design, Vector labels)
      : beta_(beta), design_(std::move(design)), labels_(std::move(labels)) {
    if (!(beta_ > 0.0)) throw DomainError("LogisticQuasiModel: beta must be positive");
    if (design_.rows() != labels_.size()) throw DimensionError("LogisticQuasiModel: design/labels mismatch");
    if (!design_.allFinite()) throw DomainError("LogisticQuasiModel: design must be finite");
    for (Eigen::Index i = 0; i < labels_.size(); ++i) {
      if (labels_[i] != 0.0 && labels_[i] != 1.0) throw DomainError("LogisticQuasiModel: labels must be binary");
    }
  }

  /// Builds the model from a canonical [label, x...] dataset, prepending the intercept column.
  static LogisticQuasiModel from_dataset(const Dataset& canonical, double beta) {
    const auto n = static_cast<Eigen::Index>(canonical.size());
    const auto q = static_cast<Eigen::Index>(canonical.width()) - 1;
    RowMatrix design(n, q + 1);
    design.col(0).setOnes();
    design.rightCols(q) = canonical.rows().rightCols(q);
    return LogisticQuasiModel(beta, std::move(design), canonical.rows().col(0));
  }

  double beta() const { return beta_; }
  const RowMatrix& design() const { return design_; }
  const Vector& labels() const { return labels_; }
  std::size_t dim() const { return static_cast<std::size_t>(design_.cols()); }

 private:
  double beta_;
  RowMatrix design_;
  Vector labels_;
};

inline double logistic_logdensity(const LogisticQuasiModel& model, const Vector& theta) {
  const Vector z = model.design() * theta;
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    loglik += model.labels()[i] == 1.0 ? log_sigmoid(z[i]) : log_sigmoid(-z[i]);
  }
  return model.beta() * loglik - 0.5 * theta.squaredNorm();
}

namespace detail {

inline double linear_predictor(std::span<const double> row, std::span<const double> theta) {
  if (theta.size() != row.size()) throw DimensionError("logistic evaluator: theta does not match covariates");
  double z = theta[0];
  for (std::size_t j = 1; j < row.size(); ++j) z += theta[j] * row[j];
  return z;
}

}  // namespace detail

/// s_i(theta) = beta [y log sig(x theta) + (1 - y) log(1 - sig(x theta))]. When
/// prior_share_n > 0 the prior log-density is spread over the observations,
/// adding -theta^T theta / (2 n).
inline auto logistic_score_evaluator(double beta, std::size_t prior_share_n = 0) {
  return [=](std::span<const double> row, std::span<const double> theta) {
    const double z = detail::linear_predictor(row, theta);
    double s = beta * (row[0] == 1.0 ? log_sigmoid(z) : log_sigmoid(-z));
    if (prior_share_n > 0) {
      double norm2 = 0.0;
      for (double t : theta) norm2 += t * t;
      s -= 0.5 * norm2 / static_cast<double>(prior_share_n);
    }
    return s;
  };
}

inline auto classification_loss_evaluator(ClassificationLoss kind) {
  return [kind](std::span<const double> row, std::span<const double> theta) {
    return classification_loss(kind, row[0], sigmoid(detail::linear_predictor(row, theta)));
  };
}

}  // namespace pcic
