#pragma once

// Domain types shared by the estimators, samplers and the CLI.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pcic {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class SamplerError : public Error {
 public:
  using Error::Error;
};

/// A loss or score evaluator returned a non-finite value.
class EvaluationError : public Error {
 public:
  EvaluationError(std::size_t row, std::size_t draw, std::string source)
      : Error(source + " evaluator returned a non-finite value at (i=" + std::to_string(row) +
              ", k=" + std::to_string(draw) + ")"),
        row_(row),
        draw_(draw),
        source_(std::move(source)) {}

  std::size_t row() const { return row_; }
  std::size_t draw() const { return draw_; }
  const std::string& source() const { return source_; }

 private:
  std::size_t row_;
  std::size_t draw_;
  std::string source_;
};

/// Observations X_1..X_n stored row-major; each row is one observation record.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(RowMatrix rows, std::vector<std::string> columns = {})
      : rows_(std::move(rows)), columns_(std::move(columns)) {
    if (rows_.rows() < 1 || rows_.cols() < 1) {
      throw DimensionError("dataset must contain at least one row and one column");
    }
    if (!rows_.allFinite()) throw DomainError("dataset contains non-finite entries");
    if (!columns_.empty() && columns_.size() != static_cast<std::size_t>(rows_.cols())) {
      throw DimensionError("column names do not match dataset width");
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t width() const { return static_cast<std::size_t>(rows_.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {rows_.data() + i * width(), width()};
  }

  const RowMatrix& rows() const { return rows_; }
  const std::vector<std::string>& columns() const { return columns_; }

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t j = 0; j < columns_.size(); ++j) {
      if (columns_[j] == name) return j;
    }
    return std::nullopt;
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    RowMatrix out(static_cast<Eigen::Index>(indices.size()), rows_.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      out.row(static_cast<Eigen::Index>(r)) = rows_.row(static_cast<Eigen::Index>(indices[r]));
    }
    return Dataset(std::move(out), columns_);
  }

  /// Leave-one-out copy with row `i` removed.
  Dataset without(std::size_t i) const {
    std::vector<std::size_t> keep;
    keep.reserve(size() - 1);
    for (std::size_t j = 0; j < size(); ++j) {
      if (j != i) keep.push_back(j);
    }
    return subset(keep);
  }

 private:
  RowMatrix rows_;
  std::vector<std::string> columns_;
};

struct Provenance {
  std::string sampler;
  std::uint64_t seed = 0;
  std::size_t burn_in = 0;
  std::size_t thinning = 1;
  std::optional<double> acceptance_rate;
  std::vector<std::string> warnings;
};

/// M parameter vectors theta_1..theta_M, one per row.
class PosteriorDraws {
 public:
  PosteriorDraws() = default;

  PosteriorDraws(RowMatrix draws, Provenance provenance)
      : draws_(std::move(draws)), provenance_(std::move(provenance)) {
    if (draws_.rows() < 1 || draws_.cols() < 1) {
      throw DimensionError("posterior draws must contain at least one draw");
    }
    if (!draws_.allFinite()) throw DomainError("posterior draws contain non-finite entries");
  }

  std::size_t size() const { return static_cast<std::size_t>(draws_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(draws_.cols()); }

  std::span<const double> draw(std::size_t k) const {
    return {draws_.data() + k * dim(), dim()};
  }

  const RowMatrix& matrix() const { return draws_; }
  const Provenance& provenance() const { return provenance_; }
  Provenance& provenance() { return provenance_; }

 private:
  RowMatrix draws_;
  Provenance provenance_;
};

/// Per-observation, per-draw loss values nu(X_i, theta_k) and scores s(X_i, theta_k).
class EvalMatrix {
 public:
  EvalMatrix() = default;

  EvalMatrix(RowMatrix nu, RowMatrix s) : nu_(std::move(nu)), s_(std::move(s)) {
    if (nu_.rows() != s_.rows() || nu_.cols() != s_.cols()) {
      throw DimensionError("loss and score matrices must have identical dimensions");
    }
    if (nu_.rows() < 1 || nu_.cols() < 1) throw DimensionError("evaluation matrix is empty");
    if (!nu_.allFinite() || !s_.allFinite()) {
      throw DomainError("evaluation matrix contains non-finite entries");
    }
  }

  std::size_t n() const { return static_cast<std::size_t>(nu_.rows()); }
  std::size_t m() const { return static_cast<std::size_t>(nu_.cols()); }

  const RowMatrix& nu() const { return nu_; }
  const RowMatrix& s() const { return s_; }

  /// Columns [first, first + count) as a new matrix; used for batch means.
  EvalMatrix columns(std::size_t first, std::size_t count) const {
    const auto f = static_cast<Eigen::Index>(first);
    const auto c = static_cast<Eigen::Index>(count);
    return EvalMatrix(nu_.middleCols(f, c), s_.middleCols(f, c));
  }

 private:
  RowMatrix nu_;
  RowMatrix s_;
};

class ObservationWeights {
 public:
  explicit ObservationWeights(Vector w) : w_(std::move(w)) {
    for (Eigen::Index i = 0; i < w_.size(); ++i) {
      if (!std::isfinite(w_[i]) || w_[i] < 0.0) {
        throw DomainError("observation weight " + std::to_string(i) +
                          " must be finite and nonnegative");
      }
    }
  }

  std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
  const Vector& values() const { return w_; }

 private:
  Vector w_;
};

/// Output of the PCIC estimators. pcic_gibbs == empirical_gibbs - correction_v and
/// correction_v == influence.mean().
struct RiskReport {
  double empirical_gibbs = 0.0;
  std::optional<double> empirical_plugin;
  double correction_v = 0.0;
  double pcic_gibbs = 0.0;
  std::optional<double> pcic_plugin;
  Vector influence;
  Vector kappa3;
  std::optional<double> mc_se;
};

template <class F>
concept Evaluator = requires(F f, std::span<const double> row, std::span<const double> theta) {
  { f(row, theta) } -> std::convertible_to<double>;
};

/// Materializes nu[i][k] = loss(row_i, theta_k) and s[i][k] = score(row_i, theta_k).
template <Evaluator Loss, Evaluator Score>
EvalMatrix build_eval_matrix(const Dataset& data, const PosteriorDraws& draws, Loss&& loss,
                             Score&& score) {
  const std::size_t n = data.size();
  const std::size_t m = draws.size();
  if (n < 1) throw DimensionError("build_eval_matrix: empty dataset");
  if (m < 2) throw DimensionError("build_eval_matrix: at least two posterior draws are required");

  RowMatrix nu(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  RowMatrix s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = data.row(i);
    double* nu_row = nu.data() + i * m;
    double* s_row = s.data() + i * m;
    for (std::size_t k = 0; k < m; ++k) {
      const auto theta = draws.draw(k);
      const double lv = static_cast<double>(loss(row, theta));
      if (!std::isfinite(lv)) throw EvaluationError(i, k, "loss");
      const double sv = static_cast<double>(score(row, theta));
      if (!std::isfinite(sv)) throw EvaluationError(i, k, "score");
      nu_row[k] = lv;
      s_row[k] = sv;
    }
  }
  return EvalMatrix(std::move(nu), std::move(s));
}

/// Componentwise mean of the draws.
inline Vector posterior_mean(const PosteriorDraws& draws) {
  return draws.matrix().colwise().mean().transpose();
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace pcic
