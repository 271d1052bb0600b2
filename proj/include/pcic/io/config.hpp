#pragma once

// Experiment configuration read from JSON. Keys match the ExperimentConfig fields exactly;
// unknown keys are rejected and the seed is mandatory. Defaults depend on the experiment
// and are filled in before user values are applied, so a parsed config is always complete.

#include <pcic/core.hpp>
#include <pcic/io/csv.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pcic::io {

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"estimate",  "location", "dp_logistic",
                                              "outlier",   "sensitivity", "check"};
  return names;
}

struct ExperimentConfig {
  std::string experiment;
  std::string model = "location";  // estimate only: location | logistic | regression
  double beta = 1.0;
  std::vector<double> betas{0.5, 1.0};
  double tau = 10.0;
  std::vector<double> theta_star;  // empty: experiment default
  std::vector<std::vector<double>> loss_matrix;  // empty: identity
  std::size_t d = 1;
  std::size_t n = 100;
  std::size_t n_test = 0;  // 0: exact expectation over a fresh observation where available
  std::size_t m = 4000;
  std::size_t replications = 2000;
  std::size_t burn_in = 100;
  std::size_t thin = 5;
  std::uint64_t seed = 0;
  std::string loss;
  std::vector<std::string> losses;
  std::vector<double> r_values;
  std::vector<double> weights;  // empty: no weighted PCIC
  bool modified_score = false;
  std::string noise = "gaussian";
  std::size_t pool_size = 1372;
  std::size_t covariates = 4;
  bool include_loocv = false;
  double proposal_scale = 0.1;
  std::string output;
};

namespace detail {

inline void apply_defaults(ExperimentConfig& c) {
  const std::string& e = c.experiment;
  if (e == "location") {
    c.n = 100;
    c.m = 4000;
    c.replications = 2000;
    c.n_test = 0;
  } else if (e == "dp_logistic") {
    c.n = 50;
    c.n_test = 10;
    c.m = 3980;
    c.replications = 50;
    c.losses = {"brier", "misclass", "spherical"};
  } else if (e == "outlier" || e == "sensitivity") {
    c.n = 50;
    c.n_test = 0;
    c.m = 3980;
    c.replications = 50;
    c.losses = {"l2", "scaled_l1"};
    c.r_values = e == "outlier" ? std::vector<double>{1, 2, 3, 4, 5, 6} : std::vector<double>{6};
  } else if (e == "estimate") {
    c.m = 3980;
  }
}

template <class T>
T get_as(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

inline std::size_t get_count(const nlohmann::json& value, const std::string& key, bool allow_zero = false) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < (allow_zero ? 0 : 1)) {
    throw ConfigError("config key '" + key + "' must be a " +
                      (allow_zero ? "non-negative" : "positive") + " integer");
  }
  return value.get<std::size_t>();
}

inline double get_positive(const nlohmann::json& value, const std::string& key) {
  const double v = get_as<double>(value, key);
  if (!(v > 0.0)) throw ConfigError("config key '" + key + "' must be positive");
  return v;
}

}  // namespace detail

/// Parses a config object. `experiment_hint` supplies the experiment when the JSON omits it
/// (the replicate subcommand names it on the command line); a conflicting value is an error.
inline ExperimentConfig parse_config(const nlohmann::json& j,
                                     const std::optional<std::string>& experiment_hint = std::nullopt) {
  using detail::get_as;
  using detail::get_count;
  using detail::get_positive;
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  static const std::set<std::string> known{
      "experiment", "model",  "beta",        "betas",         "tau",      "theta_star",
      "loss_matrix", "d",     "n",           "n_test",        "m",        "replications",
      "burn_in",    "thin",   "seed",        "loss",          "losses",   "r_values",
      "weights",    "modified_score", "noise", "pool_size",   "covariates", "include_loocv",
      "proposal_scale", "output"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig c;
  if (j.contains("experiment")) c.experiment = get_as<std::string>(j["experiment"], "experiment");
  if (experiment_hint) {
    if (!c.experiment.empty() && c.experiment != *experiment_hint) {
      throw ConfigError("config experiment '" + c.experiment + "' does not match '" + *experiment_hint + "'");
    }
    c.experiment = *experiment_hint;
  }
  if (c.experiment.empty()) throw ConfigError("config key 'experiment' is required");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    throw ConfigError("unknown experiment '" + c.experiment + "'");
  }
  if (!j.contains("seed")) throw ConfigError("config key 'seed' is required");
  detail::apply_defaults(c);

  const auto has = [&](const char* key) { return j.contains(key); };
  const auto& seed = j["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw ConfigError("config key 'seed' must be a non-negative integer");
  }
  c.seed = seed.get<std::uint64_t>();
  if (has("model")) c.model = get_as<std::string>(j["model"], "model");
  if (has("beta")) c.beta = get_positive(j["beta"], "beta");
  if (has("betas")) c.betas = get_as<std::vector<double>>(j["betas"], "betas");
  if (has("tau")) c.tau = get_positive(j["tau"], "tau");
  if (has("theta_star")) c.theta_star = get_as<std::vector<double>>(j["theta_star"], "theta_star");
  if (has("loss_matrix")) c.loss_matrix = get_as<std::vector<std::vector<double>>>(j["loss_matrix"], "loss_matrix");
  if (has("d")) c.d = get_count(j["d"], "d");
  if (has("n")) c.n = get_count(j["n"], "n");
  if (has("n_test")) c.n_test = get_count(j["n_test"], "n_test", true);
  if (has("m")) c.m = get_count(j["m"], "m");
  if (has("replications")) c.replications = get_count(j["replications"], "replications");
  if (has("burn_in")) c.burn_in = get_count(j["burn_in"], "burn_in", true);
  if (has("thin")) c.thin = get_count(j["thin"], "thin");
  if (has("loss")) c.loss = get_as<std::string>(j["loss"], "loss");
  if (has("losses")) c.losses = get_as<std::vector<std::string>>(j["losses"], "losses");
  if (has("r_values")) c.r_values = get_as<std::vector<double>>(j["r_values"], "r_values");
  if (has("weights")) c.weights = get_as<std::vector<double>>(j["weights"], "weights");
  if (has("modified_score")) c.modified_score = get_as<bool>(j["modified_score"], "modified_score");
  if (has("noise")) c.noise = get_as<std::string>(j["noise"], "noise");
  if (has("pool_size")) c.pool_size = get_count(j["pool_size"], "pool_size");
  if (has("covariates")) c.covariates = get_count(j["covariates"], "covariates");
  if (has("include_loocv")) c.include_loocv = get_as<bool>(j["include_loocv"], "include_loocv");
  if (has("proposal_scale")) c.proposal_scale = get_positive(j["proposal_scale"], "proposal_scale");
  if (has("output")) c.output = get_as<std::string>(j["output"], "output");

  for (double b : c.betas) {
    if (!(b > 0.0)) throw ConfigError("config key 'betas' must hold positive values");
  }
  for (double w : c.weights) {
    if (!(w >= 0.0)) throw ConfigError("config key 'weights' must hold non-negative values");
  }
  if (c.m < 2) throw ConfigError("config key 'm' must be at least 2");
  if (!c.loss_matrix.empty()) {
    for (const auto& row : c.loss_matrix) {
      if (row.size() != c.loss_matrix.size()) throw ConfigError("config key 'loss_matrix' must be square");
    }
  }
  return c;
}

inline ExperimentConfig read_config(const std::string& path,
                                    const std::optional<std::string>& experiment_hint = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j, experiment_hint);
}

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["experiment"] = c.experiment;
  j["model"] = c.model;
  j["beta"] = c.beta;
  j["betas"] = c.betas;
  j["tau"] = c.tau;
  j["theta_star"] = c.theta_star;
  j["loss_matrix"] = c.loss_matrix;
  j["d"] = c.d;
  j["n"] = c.n;
  j["n_test"] = c.n_test;
  j["m"] = c.m;
  j["replications"] = c.replications;
  j["burn_in"] = c.burn_in;
  j["thin"] = c.thin;
  j["seed"] = c.seed;
  j["loss"] = c.loss;
  j["losses"] = c.losses;
  j["r_values"] = c.r_values;
  j["weights"] = c.weights;
  j["modified_score"] = c.modified_score;
  j["noise"] = c.noise;
  j["pool_size"] = c.pool_size;
  j["covariates"] = c.covariates;
  j["include_loocv"] = c.include_loocv;
  j["proposal_scale"] = c.proposal_scale;
  j["output"] = c.output;
  return j;
}

/// Location loss matrix from the config: identity when unspecified.
inline Matrix loss_matrix_of(const ExperimentConfig& c, std::size_t d) {
  if (c.loss_matrix.empty()) return Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  if (c.loss_matrix.size() != d) {
    throw ConfigError("loss_matrix is " + std::to_string(c.loss_matrix.size()) + "x" +
                      std::to_string(c.loss_matrix.size()) + " but the data have dimension " + std::to_string(d));
  }
  Matrix a(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t col = 0; col < d; ++col) {
      a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = c.loss_matrix[r][col];
    }
  }
  return a;
}

}  // namespace pcic::io
