#pragma once

// End-to-end estimation on a user dataset: sample the quasi-posterior, build the loss and
// score matrices, and report PCIC together with its diagnostics.

#include <pcic/estimators.hpp>
#include <pcic/io/config.hpp>
#include <pcic/io/csv.hpp>
#include <pcic/models/location.hpp>
#include <pcic/models/logistic.hpp>
#include <pcic/models/mcmc.hpp>
#include <pcic/models/peruggia.hpp>
#include <pcic/parallel.hpp>

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace pcic::cli {

using nlohmann::json;

/// kappa3_bound at or below this fraction of |V| counts as an acceptable third-cumulant term.
inline constexpr double kKappa3AcceptableRatio = 0.1;

struct EstimateOutput {
  json report;
  PosteriorDraws draws;
};

namespace detail {

inline json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string default_loss(const std::string& model) {
  if (model == "location") return "quadratic";
  if (model == "logistic") return "brier";
  return "l2";
}

/// Everything after sampling is shared across models.
template <class Loss, class Score, class PlainScore>
json assemble(const io::ExperimentConfig& c, const Dataset& data, const PosteriorDraws& draws, const Loss& loss,
              const Score& score, const PlainScore& plain_score) {
  const auto em = build_eval_matrix(data, draws, loss, score);
  const RiskReport report = pcic_plugin(em, plugin_empirical(data, draws, loss));
  const auto plain_em = build_eval_matrix(data, draws, loss, plain_score);

  json r;
  r["empirical_gibbs"] = report.empirical_gibbs;
  r["empirical_plugin"] = optional_json(report.empirical_plugin);
  r["correction_v"] = report.correction_v;
  r["pcic_gibbs"] = report.pcic_gibbs;
  r["pcic_plugin"] = optional_json(report.pcic_plugin);
  r["mc_se"] = optional_json(report.mc_se);
  r["influence"] = vector_json(report.influence);
  r["kappa3"] = vector_json(report.kappa3);

  json diag;
  const double bound = kappa3_bound(report.kappa3);
  const double scale = std::abs(report.correction_v);
  diag["kappa3_bound"] = bound;
  diag["kappa3_relative"] = scale > 0.0 ? json(bound / scale) : json(nullptr);
  diag["kappa3_acceptable"] = bound <= kKappa3AcceptableRatio * scale;
  diag["iscv_gibbs"] = iscv_gibbs(plain_em);
  if (!c.weights.empty()) {
    diag["pcic_weighted"] = pcic_weighted(em, ObservationWeights(Eigen::Map<const Vector>(
                                                  c.weights.data(), static_cast<Eigen::Index>(c.weights.size()))));
  }

  const auto& p = draws.provenance();
  json prov;
  prov["sampler"] = p.sampler;
  prov["seed"] = p.seed;
  prov["burn_in"] = p.burn_in;
  prov["thinning"] = p.thinning;
  prov["draws"] = draws.size();
  prov["acceptance_rate"] = optional_json(p.acceptance_rate);
  prov["warnings"] = p.warnings;

  json out;
  out["config"] = io::to_json(c);
  out["data"] = {{"n", data.size()}, {"columns", data.columns()}};
  out["provenance"] = prov;
  out["report"] = r;
  out["diagnostics"] = diag;
  return out;
}

}  // namespace detail

/// Runs the estimate command on an already-parsed dataset.
inline EstimateOutput estimate(const io::ExperimentConfig& c, const Dataset& raw) {
  const std::string loss_name = c.loss.empty() ? detail::default_loss(c.model) : c.loss;
  const std::uint64_t seed = derive_seed(c.seed, 1);
  if (!c.weights.empty() && c.weights.size() != raw.size()) {
    throw io::ConfigError("weights has " + std::to_string(c.weights.size()) + " entries for " +
                          std::to_string(raw.size()) + " observations");
  }

  EstimateOutput out;
  if (c.model == "location") {
    if (loss_name != "quadratic") throw io::ConfigError("location model supports only the quadratic loss");
    const std::size_t d = raw.width();
    const Matrix a = io::loss_matrix_of(c, d);
    const LocationModel model(Vector::Zero(static_cast<Eigen::Index>(d)), c.beta, c.tau, a);
    out.draws = location_exact_draws(location_posterior(raw, c.beta, c.tau), c.m, seed);
    const auto loss = quadratic_loss_evaluator(model.loss_matrix());
    const auto plain = location_score_evaluator(c.beta);
    out.report = c.modified_score
                     ? detail::assemble(c, raw, out.draws, loss,
                                        modified_location_score_evaluator(c.beta, c.tau, raw.size()), plain)
                     : detail::assemble(c, raw, out.draws, loss, plain, plain);
  } else if (c.model == "logistic") {
    const auto data = canonical_logistic_dataset(raw);
    const auto model = LogisticQuasiModel::from_dataset(data, c.beta);
    out.draws = tuned_rw_metropolis([&](const Vector& t) { return logistic_logdensity(model, t); },
                                    Vector::Zero(static_cast<Eigen::Index>(model.dim())), c.m, c.burn_in, c.thin,
                                    seed, c.proposal_scale);
    const auto loss = classification_loss_evaluator(parse_classification_loss(loss_name));
    const auto plain = logistic_score_evaluator(c.beta);
    out.report = c.modified_score
                     ? detail::assemble(c, data, out.draws, loss, logistic_score_evaluator(c.beta, data.size()), plain)
                     : detail::assemble(c, data, out.draws, loss, plain, plain);
  } else if (c.model == "regression") {
    // The Gibbs sampler targets the untempered posterior, so the score is the log-likelihood.
    if (c.beta != 1.0) throw io::ConfigError("regression model requires beta = 1");
    if (c.modified_score) throw io::ConfigError("modified_score is not available for the regression model");
    const auto data = canonical_regression_dataset(raw);
    out.draws = regression_gibbs(data, c.m, c.burn_in, c.thin, seed);
    const auto loss = regression_loss_evaluator(parse_regression_loss(loss_name));
    const auto score = regression_loglik_evaluator();
    out.report = detail::assemble(c, data, out.draws, loss, score, score);
  } else {
    throw io::ConfigError("unknown model '" + c.model + "' (expected location, logistic or regression)");
  }
  out.report["config"]["loss"] = loss_name;
  return out;
}

}  // namespace pcic::cli
