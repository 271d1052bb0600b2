#pragma once

// Replication studies: the conjugate location model, tempered logistic regression on
// random train/test splits, and regression with one influential covariate. Every
// replication derives its own seeds from the config seed, so results do not depend on
// the number of worker threads.

#include <pcic/estimators.hpp>
#include <pcic/io/config.hpp>
#include <pcic/io/csv.hpp>
#include <pcic/models/generate.hpp>
#include <pcic/models/location.hpp>
#include <pcic/models/logistic.hpp>
#include <pcic/models/mcmc.hpp>
#include <pcic/models/peruggia.hpp>
#include <pcic/parallel.hpp>
#include <pcic/sensitivity.hpp>
#include <pcic/stats.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace pcic::experiments {

using io::ExperimentConfig;
using nlohmann::json;

struct Row {
  std::string setting;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  std::string estimator;
  double value = 0.0;
  std::optional<double> test_error;
};

struct Result {
  std::string experiment;
  std::string csv;
  json summary;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string rows_csv(const std::string& experiment, const std::vector<Row>& rows) {
  std::ostringstream out;
  out << "experiment,setting,replication,seed,estimator,value,test_error\n";
  for (const auto& r : rows) {
    out << experiment << ',' << r.setting << ',' << r.replication << ',' << r.seed << ','
        << r.estimator << ',' << io::format_double(r.value) << ','
        << (r.test_error ? io::format_double(*r.test_error) : "") << '\n';
  }
  return out.str();
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

/// Per (setting, estimator): mean and MC standard error of the values, and when test errors
/// are present the mean test error and the paired bias value - test_error.
inline json summarize_rows(const std::vector<Row>& rows) {
  std::vector<std::string> settings;
  std::map<std::string, std::vector<std::string>> estimators;
  std::map<std::pair<std::string, std::string>, std::vector<const Row*>> groups;
  for (const auto& r : rows) {
    if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
    auto& names = estimators[r.setting];
    if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
    groups[{r.setting, r.estimator}].push_back(&r);
  }
  json out = json::array();
  for (const auto& setting : settings) {
    json entry;
    entry["setting"] = setting;
    json est = json::object();
    for (const auto& name : estimators[setting]) {
      const auto& group = groups[{setting, name}];
      std::vector<double> values;
      std::vector<double> tests;
      std::vector<double> diffs;
      for (const Row* r : group) {
        values.push_back(r->value);
        if (r->test_error) {
          tests.push_back(*r->test_error);
          diffs.push_back(r->value - *r->test_error);
        }
      }
      const auto v = summarize(values);
      json s;
      s["count"] = v.count;
      s["mean"] = number_or_null(v.mean);
      s["mc_se"] = number_or_null(v.se);
      if (tests.size() == values.size()) {
        const auto t = summarize(tests);
        const auto d = summarize(diffs);
        s["mean_test_error"] = number_or_null(t.mean);
        s["test_error_se"] = number_or_null(t.se);
        s["bias"] = number_or_null(d.mean);
        s["bias_se"] = number_or_null(d.se);
      }
      est[name] = s;
    }
    entry["estimators"] = est;
    out.push_back(entry);
  }
  return out;
}

template <Evaluator Loss>
double posterior_mean_loss(const Dataset& data, const PosteriorDraws& draws, const Loss& loss) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < draws.size(); ++k) total += loss(data.row(i), draws.draw(k));
  }
  return total / static_cast<double>(data.size() * draws.size());
}

inline void require_replications(const ExperimentConfig& c) {
  if (c.replications < 2) {
    throw io::ConfigError("replications must be at least 2 for Monte Carlo standard errors");
  }
}

/// Rows shared by every study: the four PCIC-family estimators, IS-CV and the correction.
inline void push_standard_rows(std::vector<Row>& out, const std::string& setting, std::size_t rep,
                               std::uint64_t seed, const RiskReport& report, double iscv,
                               double test_gibbs, double test_plugin) {
  out.push_back({setting, rep, seed, "empirical_gibbs", report.empirical_gibbs, test_gibbs});
  out.push_back({setting, rep, seed, "pcic_gibbs", report.pcic_gibbs, test_gibbs});
  out.push_back({setting, rep, seed, "empirical_plugin", *report.empirical_plugin, test_plugin});
  out.push_back({setting, rep, seed, "pcic_plugin", *report.pcic_plugin, test_plugin});
  out.push_back({setting, rep, seed, "iscv_gibbs", iscv, test_gibbs});
  out.push_back({setting, rep, seed, "correction_v", report.correction_v, std::nullopt});
}

inline std::vector<Row> flatten(std::vector<std::vector<Row>>& parts) {
  std::vector<Row> rows;
  for (auto& p : parts) {
    rows.insert(rows.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
  }
  return rows;
}

inline std::size_t argmax(const Vector& v) {
  Eigen::Index idx = 0;
  v.maxCoeff(&idx);
  return static_cast<std::size_t>(idx);
}

}  // namespace detail

// ---------------------------------------------------------------------------------------
// Location model

inline Vector location_theta_star(const ExperimentConfig& c) {
  if (c.theta_star.empty()) return Vector::Zero(static_cast<Eigen::Index>(c.d));
  if (c.theta_star.size() != c.d) throw io::ConfigError("theta_star must have d entries");
  return Eigen::Map<const Vector>(c.theta_star.data(), static_cast<Eigen::Index>(c.d));
}

/// One location replication. With n_test = 0 the test errors are exact expectations over a
/// fresh observation given the draws: tr(A) + E_k[(theta_k - theta*)^T A (theta_k - theta*)].
inline std::vector<Row> location_replication(const ExperimentConfig& c, const LocationModel& model,
                                             const std::string& setting, std::size_t rep) {
  const std::uint64_t seed = derive_seed(c.seed, rep);
  const Matrix& a = model.loss_matrix();
  const LocationDataParams params{model.theta_star(), parse_noise(c.noise)};
  const auto data = generate_data(params, c.n, derive_seed(seed, 1));
  const auto post = location_posterior(data, model.beta(), model.tau());
  const auto draws = location_exact_draws(post, c.m, derive_seed(seed, 2));
  const auto loss = quadratic_loss_evaluator(a);
  const auto plain_score = location_score_evaluator(model.beta());

  const auto plain_em = build_eval_matrix(data, draws, loss, plain_score);
  const double plug = plugin_empirical(data, draws, loss);
  const RiskReport report =
      c.modified_score
          ? pcic_plugin(build_eval_matrix(data, draws, loss,
                                          modified_location_score_evaluator(model.beta(), model.tau(), c.n)),
                        plug)
          : pcic_plugin(plain_em, plug);
  const double iscv = iscv_gibbs(plain_em);

  double test_gibbs = 0.0;
  double test_plugin = 0.0;
  const Vector mean = posterior_mean(draws);
  if (c.n_test == 0) {
    const auto& th = model.theta_star();
    double total = 0.0;
    for (std::size_t k = 0; k < draws.size(); ++k) total += quadratic_loss(draws.draw(k), as_span(th), a);
    test_gibbs = a.trace() + total / static_cast<double>(draws.size());
    test_plugin = a.trace() + quadratic_loss(as_span(mean), as_span(th), a);
  } else {
    const auto test = generate_data(params, c.n_test, derive_seed(seed, 3));
    test_gibbs = detail::posterior_mean_loss(test, draws, loss);
    double total = 0.0;
    for (std::size_t i = 0; i < test.size(); ++i) total += loss(test.row(i), as_span(mean));
    test_plugin = total / static_cast<double>(test.size());
  }

  std::vector<Row> rows;
  detail::push_standard_rows(rows, setting, rep, seed, report, iscv, test_gibbs, test_plugin);
  rows.push_back({setting, rep, seed, "oracle_v", oracle_expected_covariance(data, model), std::nullopt});
  if (c.include_loocv) {
    const double beta = model.beta();
    const double tau = model.tau();
    const std::size_t m = c.m;
    const auto cv = exact_loocv(
        data, [&](const Dataset& sub, std::uint64_t s) { return location_exact_draws(location_posterior(sub, beta, tau), m, s); },
        loss, derive_seed(seed, 4));
    rows.push_back({setting, rep, seed, "exact_loocv", cv.value, test_gibbs});
  }
  return rows;
}

inline Result run_location(const ExperimentConfig& c, std::size_t threads) {
  detail::require_replications(c);
  const Vector theta_star = location_theta_star(c);
  const LocationModel model(theta_star, c.beta, c.tau, io::loss_matrix_of(c, c.d));
  std::string setting = "n=" + std::to_string(c.n) + ";d=" + std::to_string(c.d) + ";beta=" + detail::fmt(c.beta) +
                        ";tau=" + detail::fmt(c.tau) + ";modified=" + (c.modified_score ? "1" : "0");

  std::vector<std::vector<Row>> parts(c.replications);
  parallel_for(c.replications, threads, [&](std::size_t r) { parts[r] = location_replication(c, model, setting, r); });
  const auto rows = detail::flatten(parts);

  Result out;
  out.experiment = "location";
  out.csv = detail::rows_csv(out.experiment, rows);
  out.summary["experiment"] = out.experiment;
  out.summary["settings"] = detail::summarize_rows(rows);
  json oracle;
  oracle["gibbs_gap"] = oracle_gibbs_gap(c.n, c.beta, c.tau, model.loss_matrix());
  oracle["bias_term"] = oracle_bias_term(model, c.n);
  oracle["rem"] = oracle_rem(c.n, c.beta, c.tau, model.loss_matrix());
  out.summary["settings"][0]["oracle"] = oracle;
  return out;
}

// ---------------------------------------------------------------------------------------
// Tempered logistic regression on random splits of a synthetic pool

/// Default coefficients: zero intercept, then 1, -1, 1/2, -1/2, 1/3, ...
inline Vector logistic_theta_star(const ExperimentConfig& c) {
  const auto p = static_cast<Eigen::Index>(c.covariates + 1);
  if (!c.theta_star.empty()) {
    if (static_cast<Eigen::Index>(c.theta_star.size()) != p) {
      throw io::ConfigError("theta_star must have covariates + 1 entries (intercept first)");
    }
    return Eigen::Map<const Vector>(c.theta_star.data(), p);
  }
  Vector t(p);
  t[0] = 0.0;
  for (Eigen::Index j = 1; j < p; ++j) {
    t[j] = (j % 2 == 1 ? 1.0 : -1.0) / static_cast<double>((j + 1) / 2);
  }
  return t;
}

inline Result run_dp_logistic(const ExperimentConfig& c, std::size_t threads) {
  detail::require_replications(c);
  if (c.betas.empty()) throw io::ConfigError("betas must not be empty");
  if (c.n + c.n_test > c.pool_size) throw io::ConfigError("n + n_test exceeds pool_size");
  if (c.n_test == 0) throw io::ConfigError("dp_logistic needs n_test >= 1");
  std::vector<ClassificationLoss> kinds;
  for (const auto& name : c.losses) kinds.push_back(parse_classification_loss(name));

  const auto pool = generate_data(LogisticDataParams{logistic_theta_star(c)}, c.pool_size, derive_seed(c.seed, 0xD0));
  std::vector<std::vector<Row>> parts(c.replications);
  std::vector<std::vector<std::string>> warnings(c.replications);

  parallel_for(c.replications, threads, [&](std::size_t r) {
    const std::uint64_t seed = derive_seed(c.seed, r);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(seed, 1));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    RowMatrix train_rows(static_cast<Eigen::Index>(c.n), pool.rows().cols());
    RowMatrix test_rows(static_cast<Eigen::Index>(c.n_test), pool.rows().cols());
    for (std::size_t i = 0; i < c.n; ++i) train_rows.row(static_cast<Eigen::Index>(i)) = pool.rows().row(static_cast<Eigen::Index>(order[i]));
    for (std::size_t i = 0; i < c.n_test; ++i) {
      test_rows.row(static_cast<Eigen::Index>(i)) = pool.rows().row(static_cast<Eigen::Index>(order[c.n + i]));
    }
    const Dataset train(std::move(train_rows), pool.columns());
    const Dataset test(std::move(test_rows), pool.columns());

    for (std::size_t b = 0; b < c.betas.size(); ++b) {
      const double beta = c.betas[b];
      const auto model = LogisticQuasiModel::from_dataset(train, beta);
      const auto draws = tuned_rw_metropolis([&](const Vector& t) { return logistic_logdensity(model, t); },
                                             Vector::Zero(static_cast<Eigen::Index>(model.dim())), c.m, c.burn_in,
                                             c.thin, derive_seed(seed, 2 + b), c.proposal_scale);
      for (const auto& w : draws.provenance().warnings) {
        warnings[r].push_back("split " + std::to_string(r) + ", beta=" + detail::fmt(beta) + ": " + w);
      }
      const Vector mean = posterior_mean(draws);
      const auto plain_score = logistic_score_evaluator(beta);
      for (auto kind : kinds) {
        const auto loss = classification_loss_evaluator(kind);
        const std::string setting = "beta=" + detail::fmt(beta) + ";loss=" + std::string(to_string(kind));
        const auto plain_em = build_eval_matrix(train, draws, loss, plain_score);
        const double plug = plugin_empirical(train, draws, loss);
        const RiskReport report =
            c.modified_score ? pcic_plugin(build_eval_matrix(train, draws, loss, logistic_score_evaluator(beta, c.n)), plug)
                             : pcic_plugin(plain_em, plug);
        const double test_gibbs = detail::posterior_mean_loss(test, draws, loss);
        double test_plugin = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) test_plugin += loss(test.row(i), as_span(mean));
        test_plugin /= static_cast<double>(test.size());
        detail::push_standard_rows(parts[r], setting, r, seed, report, iscv_gibbs(plain_em), test_gibbs, test_plugin);
      }
    }
  });

  // Settings are emitted beta-major, loss-minor regardless of replication order.
  auto rows = detail::flatten(parts);
  std::vector<std::string> order;
  for (double beta : c.betas) {
    for (auto kind : kinds) order.push_back("beta=" + detail::fmt(beta) + ";loss=" + std::string(to_string(kind)));
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& x, const Row& y) {
    return std::find(order.begin(), order.end(), x.setting) < std::find(order.begin(), order.end(), y.setting);
  });

  Result out;
  out.experiment = "dp_logistic";
  out.csv = detail::rows_csv(out.experiment, rows);
  out.summary["experiment"] = out.experiment;
  out.summary["settings"] = detail::summarize_rows(rows);
  json all_warnings = json::array();
  for (const auto& w : warnings) {
    for (const auto& s : w) all_warnings.push_back(s);
  }
  out.summary["sampler_warnings"] = all_warnings;
  return out;
}

// ---------------------------------------------------------------------------------------
// Regression with an influential covariate

inline OutlierDataParams outlier_params(const ExperimentConfig& c, double r) {
  OutlierDataParams p;
  p.r = r;
  if (!c.theta_star.empty()) {
    if (c.theta_star.size() != 3) throw io::ConfigError("theta_star for regression is [beta0, beta1, sigma]");
    p.beta0 = c.theta_star[0];
    p.beta1 = c.theta_star[1];
    p.sigma = c.theta_star[2];
    if (!(p.sigma > 0.0)) throw io::ConfigError("regression sigma must be positive");
  }
  return p;
}

/// Expected loss of the draws at a fresh response for a covariate drawn uniformly from the
/// training design: Gibbs (averaged over draws) and plugin (at the posterior mean).
inline std::pair<double, double> regression_expected_test_error(const Dataset& training, const PosteriorDraws& draws,
                                                                const OutlierDataParams& truth, RegressionLoss kind) {
  auto expected = [&](double x, double b0, double b1, double sigma_model) {
    const double delta = truth.beta0 + truth.beta1 * x - b0 - b1 * x;
    if (kind == RegressionLoss::l2) return delta * delta + truth.sigma * truth.sigma;
    // E|delta + sigma Z| for Z standard normal.
    const double u = delta / truth.sigma;
    const double abs_mean =
        truth.sigma * (std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * u * u) + u * std::erf(u / std::sqrt(2.0)));
    return abs_mean / sigma_model;
  };
  const Vector mean = posterior_mean(draws);
  double gibbs = 0.0;
  double plugin = 0.0;
  for (std::size_t i = 0; i < training.size(); ++i) {
    const double x = training.row(i)[0];
    for (std::size_t k = 0; k < draws.size(); ++k) {
      const auto t = draws.draw(k);
      gibbs += expected(x, t[0], t[1], std::sqrt(t[2]));
    }
    plugin += expected(x, mean[0], mean[1], std::sqrt(mean[2]));
  }
  const double n = static_cast<double>(training.size());
  return {gibbs / (n * static_cast<double>(draws.size())), plugin / n};
}

struct RegressionFit {
  Dataset data;
  PosteriorDraws draws;
  std::uint64_t seed = 0;
};

inline RegressionFit regression_fit(const ExperimentConfig& c, const OutlierDataParams& params, std::uint64_t seed) {
  auto data = generate_data(params, c.n, derive_seed(seed, 1));
  auto draws = regression_gibbs(data, c.m, c.burn_in, c.thin, derive_seed(seed, 2));
  return {std::move(data), std::move(draws), seed};
}

inline std::string outlier_setting(double r, RegressionLoss kind) {
  return "R=" + detail::fmt(r) + ";loss=" + std::string(to_string(kind));
}

inline Result run_outlier(const ExperimentConfig& c, std::size_t threads) {
  detail::require_replications(c);
  if (c.r_values.empty()) throw io::ConfigError("r_values must not be empty");
  std::vector<RegressionLoss> kinds;
  for (const auto& name : c.losses) kinds.push_back(parse_regression_loss(name));

  const std::size_t jobs = c.r_values.size() * c.replications;
  std::vector<std::vector<Row>> parts(jobs);
  // argmax_last[setting index][rep]
  std::vector<std::vector<int>> argmax_last(c.r_values.size() * kinds.size(), std::vector<int>(c.replications, 0));

  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t ri = job / c.replications;
    const std::size_t rep = job % c.replications;
    const double r = c.r_values[ri];
    const auto params = outlier_params(c, r);
    const auto fit = regression_fit(c, params, derive_seed(derive_seed(c.seed, ri), rep));
    const auto score = regression_loglik_evaluator();
    for (std::size_t li = 0; li < kinds.size(); ++li) {
      const auto kind = kinds[li];
      const auto loss = regression_loss_evaluator(kind);
      const auto em = build_eval_matrix(fit.data, fit.draws, loss, score);
      const RiskReport report = pcic_plugin(em, plugin_empirical(fit.data, fit.draws, loss));
      double test_gibbs = 0.0;
      double test_plugin = 0.0;
      if (c.n_test == 0) {
        std::tie(test_gibbs, test_plugin) = regression_expected_test_error(fit.data, fit.draws, params, kind);
      } else {
        const auto test = generate_design_test_set(fit.data, params, c.n_test, derive_seed(fit.seed, 3));
        test_gibbs = detail::posterior_mean_loss(test, fit.draws, loss);
        const Vector mean = posterior_mean(fit.draws);
        for (std::size_t i = 0; i < test.size(); ++i) test_plugin += loss(test.row(i), as_span(mean));
        test_plugin /= static_cast<double>(test.size());
      }
      const std::string setting = outlier_setting(r, kind);
      detail::push_standard_rows(parts[job], setting, rep, fit.seed, report, iscv_gibbs(em), test_gibbs, test_plugin);
      const auto influence = influence_measure(em);
      if (influence.normalized) {
        const std::size_t top = detail::argmax(*influence.normalized);
        parts[job].push_back({setting, rep, fit.seed, "influence_argmax", static_cast<double>(top + 1), std::nullopt});
        argmax_last[ri * kinds.size() + li][rep] = top + 1 == c.n ? 1 : 0;
      }
      if (c.include_loocv) {
        const auto cv = exact_loocv(
            fit.data,
            [&](const Dataset& sub, std::uint64_t s) { return regression_gibbs(sub, c.m, c.burn_in, c.thin, s); },
            loss, derive_seed(fit.seed, 4));
        parts[job].push_back({setting, rep, fit.seed, "exact_loocv", cv.value, test_gibbs});
      }
    }
  });

  auto rows = detail::flatten(parts);
  std::vector<std::string> order;
  for (double r : c.r_values) {
    for (auto kind : kinds) order.push_back(outlier_setting(r, kind));
  }
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& x, const Row& y) {
    return std::find(order.begin(), order.end(), x.setting) < std::find(order.begin(), order.end(), y.setting);
  });

  Result out;
  out.experiment = "outlier";
  out.csv = detail::rows_csv(out.experiment, rows);
  out.summary["experiment"] = out.experiment;
  json settings = detail::summarize_rows(rows);
  for (auto& s : settings) {
    const auto idx = static_cast<std::size_t>(std::find(order.begin(), order.end(), s["setting"].get<std::string>()) - order.begin());
    const auto& hits = argmax_last[idx];
    s["influence_argmax_last_fraction"] =
        static_cast<double>(std::accumulate(hits.begin(), hits.end(), 0)) / static_cast<double>(hits.size());
  }
  out.summary["settings"] = settings;
  return out;
}

// ---------------------------------------------------------------------------------------
// Per-observation influence and curvature profiles

inline Result run_sensitivity(const ExperimentConfig& c, std::size_t threads) {
  detail::require_replications(c);
  if (c.r_values.empty()) throw io::ConfigError("r_values must not be empty");
  std::vector<RegressionLoss> kinds;
  for (const auto& name : c.losses) kinds.push_back(parse_regression_loss(name));

  struct Profile {
    std::vector<Vector> raw;         // per loss
    std::vector<Vector> normalized;  // per loss; NaN when undefined
    Vector curvature;
    std::uint64_t seed = 0;
  };
  const std::size_t jobs = c.r_values.size() * c.replications;
  std::vector<Profile> profiles(jobs);
  parallel_for(jobs, threads, [&](std::size_t job) {
    const std::size_t ri = job / c.replications;
    const std::size_t rep = job % c.replications;
    const auto fit = regression_fit(c, outlier_params(c, c.r_values[ri]), derive_seed(derive_seed(c.seed, ri), rep));
    const auto score = regression_loglik_evaluator();
    Profile& p = profiles[job];
    p.seed = fit.seed;
    for (auto kind : kinds) {
      const auto em = build_eval_matrix(fit.data, fit.draws, regression_loss_evaluator(kind), score);
      const auto inf = influence_measure(em);
      p.raw.push_back(inf.raw);
      p.normalized.push_back(inf.normalized ? *inf.normalized
                                            : Vector::Constant(inf.raw.size(), std::numeric_limits<double>::quiet_NaN()));
      if (p.curvature.size() == 0) p.curvature = curvature_i2(em.s());
    }
  });

  std::ostringstream csv;
  csv << "experiment,setting,replication,seed,observation,influence,normalized_influence,curvature_i2\n";
  json settings = json::array();
  for (std::size_t ri = 0; ri < c.r_values.size(); ++ri) {
    for (std::size_t li = 0; li < kinds.size(); ++li) {
      const std::string setting = outlier_setting(c.r_values[ri], kinds[li]);
      Vector mean_norm = Vector::Zero(static_cast<Eigen::Index>(c.n));
      Vector mean_raw = Vector::Zero(static_cast<Eigen::Index>(c.n));
      Vector mean_curv = Vector::Zero(static_cast<Eigen::Index>(c.n));
      std::size_t hits = 0;
      std::size_t defined = 0;
      for (std::size_t rep = 0; rep < c.replications; ++rep) {
        const Profile& p = profiles[ri * c.replications + rep];
        const Vector& norm = p.normalized[li];
        for (std::size_t i = 0; i < c.n; ++i) {
          const auto ii = static_cast<Eigen::Index>(i);
          csv << "sensitivity," << setting << ',' << rep << ',' << p.seed << ',' << i + 1 << ','
              << io::format_double(p.raw[li][ii]) << ','
              << (std::isfinite(norm[ii]) ? io::format_double(norm[ii]) : "") << ','
              << io::format_double(p.curvature[ii]) << '\n';
        }
        mean_raw += p.raw[li];
        mean_curv += p.curvature;
        if (norm.allFinite()) {
          ++defined;
          mean_norm += norm;
          if (detail::argmax(norm) + 1 == c.n) ++hits;
        }
      }
      const double reps = static_cast<double>(c.replications);
      json s;
      s["setting"] = setting;
      s["replications"] = c.replications;
      s["influence_argmax_last_fraction"] = static_cast<double>(hits) / reps;
      std::vector<double> mr(mean_raw.data(), mean_raw.data() + mean_raw.size());
      std::vector<double> mc(mean_curv.data(), mean_curv.data() + mean_curv.size());
      for (auto& v : mr) v /= reps;
      for (auto& v : mc) v /= reps;
      json norm_json = json::array();
      for (Eigen::Index i = 0; i < mean_norm.size(); ++i) {
        norm_json.push_back(defined ? json(mean_norm[i] / static_cast<double>(defined)) : json(nullptr));
      }
      s["mean_influence"] = mr;
      s["mean_normalized_influence"] = norm_json;
      s["mean_curvature_i2"] = mc;
      settings.push_back(s);
    }
  }

  Result out;
  out.experiment = "sensitivity";
  out.csv = csv.str();
  out.summary["experiment"] = out.experiment;
  out.summary["settings"] = settings;
  return out;
}

inline Result run_experiment(const ExperimentConfig& c, std::size_t threads) {
  Result r;
  if (c.experiment == "location") {
    r = run_location(c, threads);
  } else if (c.experiment == "dp_logistic") {
    r = run_dp_logistic(c, threads);
  } else if (c.experiment == "outlier") {
    r = run_outlier(c, threads);
  } else if (c.experiment == "sensitivity") {
    r = run_sensitivity(c, threads);
  } else {
    throw io::ConfigError("experiment '" + c.experiment + "' cannot be replicated");
  }
  r.summary["config"] = io::to_json(c);
  return r;
}

}  // namespace pcic::experiments
