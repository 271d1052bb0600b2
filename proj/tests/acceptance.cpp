// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.
// Each criterion also has a wall-clock budget that is part of its pass condition.

#include <pcic/cli/app.hpp>
#include <pcic/experiments.hpp>
#include <pcic/pcic.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace pcic;
using nlohmann::json;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

int failures = 0;

void criterion(int id, const std::string& title, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = secs < budget_seconds;
  const bool ok = o.passed && in_budget;
  if (!ok) ++failures;
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << id << " " << title << ": " << o.detail << "; runtime "
            << num(secs) << " s (budget " << num(budget_seconds) << " s" << (in_budget ? "" : ", EXCEEDED") << ")"
            << std::endl;
}

io::ExperimentConfig config_for(const std::string& experiment, const json& overrides) {
  json j = overrides;
  j["experiment"] = experiment;
  return io::parse_config(j);
}

const json& estimator(const json& summary, const std::string& setting, const std::string& name) {
  for (const auto& s : summary["settings"]) {
    if (s["setting"] == setting) return s["estimators"][name];
  }
  throw Error("setting '" + setting + "' missing from summary");
}

// 1 ---------------------------------------------------------------------------------------
Outcome waic2_identity() {
  Rng rng(101);
  const double betas[] = {0.5, 1.0, 2.0};
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 20)(rng);
    const int m = std::uniform_int_distribution<int>(2, 200)(rng);
    const double beta = betas[t % 3];
    RowMatrix loglik(n, m);
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < m; ++k) loglik(i, k) = std::log(uniform01(rng)) - 0.1;
    }
    const double a = pcic_gibbs(EvalMatrix(RowMatrix(-loglik), RowMatrix(beta * loglik))).pcic_gibbs;
    const double b = waic2(loglik, beta);
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  return {worst <= 1e-12, "worst relative difference " + num(worst) + " (tolerance 1e-12)"};
}

// 2 ---------------------------------------------------------------------------------------
Outcome covariance_closure() {
  const std::pair<Eigen::Index, std::size_t> shapes[] = {{1, 20}, {1, 100}, {3, 20}, {3, 100}};
  double worst = 0.0;
  for (std::uint64_t j = 0; j < 10; ++j) {
    const auto [d, n] = shapes[j % 4];
    const LocationModel model(Vector::Constant(d, 0.5), 1.0, 10.0, Matrix::Identity(d, d));
    const auto data = generate_data(LocationDataParams{model.theta_star()}, n, derive_seed(202, 2 * j));
    const auto draws = location_exact_draws(location_posterior(data, 1.0, 10.0), 100000, derive_seed(202, 2 * j + 1));
    const auto em = build_eval_matrix(data, draws, quadratic_loss_evaluator(model.loss_matrix()),
                                      location_score_evaluator(1.0));
    const double v = covariance_correction(em).v;
    const double se = *batch_standard_error(em, [](const EvalMatrix& b) { return covariance_correction(b).v; }, 100);
    worst = std::max(worst, std::abs(v - oracle_expected_covariance(data, model)) / se);
  }
  return {worst <= 3.0, "worst |MC - exact| = " + num(worst) + " batch SE over 10 datasets (limit 3)"};
}

// 3 ---------------------------------------------------------------------------------------
Outcome gap_unbiasedness() {
  const auto c = config_for("location", {{"seed", 303}, {"n", 100}, {"d", 1}, {"replications", 2000}});
  const auto r = experiments::run_location(c, default_threads());
  const std::string setting = r.summary["settings"][0]["setting"];
  const double oracle_gap = r.summary["settings"][0]["oracle"]["gibbs_gap"];
  const auto& emp = estimator(r.summary, setting, "empirical_gibbs");
  const auto& pg = estimator(r.summary, setting, "pcic_gibbs");
  // bias of the empirical error is E - G, so the observed gap is its negative.
  const double gap = -emp["bias"].get<double>();
  const double gap_se = emp["bias_se"];
  const double pg_bias = pg["bias"];
  const double pg_se = pg["bias_se"];
  const bool ok = std::abs(gap - oracle_gap) <= 3.0 * gap_se && std::abs(pg_bias) <= 3.0 * pg_se;
  return {ok, "gap " + num(gap) + " vs oracle " + num(oracle_gap) + " (3 SE = " + num(3 * gap_se) +
                  "); mean(PCIC_G) - mean(G) = " + num(pg_bias) + " (3 SE = " + num(3 * pg_se) + ")"};
}

// 4 ---------------------------------------------------------------------------------------
/// Per-replication PCIC_G - G for the location study; the data noise for a replication does
/// not depend on theta*, so runs at different theta* are paired by replication.
std::vector<double> location_residuals(double theta, bool modified) {
  const std::size_t n = 20;
  const auto c = config_for("location", {{"seed", 404},
                                         {"n", n},
                                         {"tau", 1.0 / static_cast<double>(n)},
                                         {"theta_star", {theta}},
                                         {"modified_score", modified},
                                         {"replications", 2000}});
  const LocationModel model(Vector::Constant(1, theta), c.beta, c.tau, Matrix::Identity(1, 1));
  std::vector<double> out(c.replications);
  parallel_for(c.replications, default_threads(), [&](std::size_t rep) {
    for (const auto& row : experiments::location_replication(c, model, "", rep)) {
      if (row.estimator == "pcic_gibbs") out[rep] = row.value - *row.test_error;
    }
  });
  return out;
}

Outcome strong_prior_bias() {
  const std::size_t n = 20;
  const LocationModel model5(Vector::Constant(1, 5.0), 1.0, 1.0 / static_cast<double>(n), Matrix::Identity(1, 1));
  const double oracle = oracle_bias_term(model5, n);  // zero at theta* = 0

  auto shift = [](bool modified) {
    const auto r0 = location_residuals(0.0, modified);
    const auto r5 = location_residuals(5.0, modified);
    std::vector<double> d(r0.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = r5[i] - r0[i];
    return summarize(d);
  };
  const auto plain = shift(false);
  const auto mod = shift(true);
  const bool ok = std::abs(plain.mean - oracle) <= 3.0 * plain.se && std::abs(mod.mean) < 3.0 * mod.se;
  return {ok, "plain-score residual shift " + num(plain.mean) + " vs bias term " + num(oracle) + " (3 SE = " +
                  num(3 * plain.se) + "); modified-score shift " + num(mod.mean) + " (3 SE = " + num(3 * mod.se) + ")"};
}

// 5 ---------------------------------------------------------------------------------------
Outcome lemma1() {
  const LocationModel model(Vector::Constant(1, 0.0), 1.0, 10.0, Matrix::Identity(1, 1));
  const auto data = generate_data(LocationDataParams{model.theta_star()}, 20, 505);
  const auto draws = location_exact_draws(location_posterior(data, 1.0, 10.0), 100000, 506);
  const auto em = build_eval_matrix(data, draws, quadratic_loss_evaluator(model.loss_matrix()),
                                    location_score_evaluator(1.0));
  double worst1 = 0.0;
  double worst2 = 0.0;
  for (std::size_t i = 0; i < 20; ++i) {
    worst1 = std::max(worst1, finite_difference_check(em, i, 1, 1e-3).rel_error);
    worst2 = std::max(worst2, finite_difference_check(em, i, 2, 1e-3).rel_error);
  }
  return {worst1 < 0.01 && worst2 < 0.05,
          "worst rel_error k=1 " + num(worst1) + " (< 0.01), k=2 " + num(worst2) + " (< 0.05)"};
}

// 6 ---------------------------------------------------------------------------------------
Outcome kumar() {
  Rng rng(606);
  std::vector<std::pair<Matrix, Matrix>> pairs{{Matrix::Identity(2, 2), Matrix::Identity(2, 2)}};
  for (int p = 0; p < 5; ++p) {
    const Eigen::Index d = 2 + p % 3;
    auto spd = [&] {
      Matrix r(d, d);
      for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) r(i, j) = standard_normal(rng);
      }
      return Matrix(r * r.transpose() + 0.1 * Matrix::Identity(d, d));
    };
    Matrix b = spd();
    Matrix c = spd();
    pairs.emplace_back(b, c);
  }
  const bool exact_ok = kumar_expectation(pairs[0].first, pairs[0].second) == 8.0;
  double worst = 0.0;
  for (const auto& [b, c] : pairs) {
    const Eigen::Index d = b.rows();
    Vector w(d);
    double sum = 0.0;
    for (int k = 0; k < 1000000; ++k) {
      for (Eigen::Index j = 0; j < d; ++j) w[j] = standard_normal(rng);
      sum += w.dot(b * w) * w.dot(c * w);
    }
    const double exact = kumar_expectation(b, c);
    worst = std::max(worst, std::abs(sum / 1e6 - exact) / exact);
  }
  return {exact_ok && worst < 0.01, std::string("I2 value ") + (exact_ok ? "8" : "wrong") +
                                        ", worst MC relative error " + num(worst) + " (< 0.01)"};
}

// 7 ---------------------------------------------------------------------------------------
Outcome loocv_proximity() {
  const std::size_t n = 20;
  const std::size_t m = 10000;
  const LocationModel model(Vector::Constant(1, 0.0), 1.0, 10.0, Matrix::Identity(1, 1));
  const auto loss = quadratic_loss_evaluator(model.loss_matrix());
  int within = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t j = 0; j < 20; ++j) {
    const std::uint64_t seed = derive_seed(707, j);
    const auto data = generate_data(LocationDataParams{model.theta_star()}, n, derive_seed(seed, 1));
    const auto draws = location_exact_draws(location_posterior(data, 1.0, 10.0), m, derive_seed(seed, 2));
    const auto report = pcic_gibbs(build_eval_matrix(data, draws, loss, location_score_evaluator(1.0)));
    const auto cv = exact_loocv(
        data, [&](const Dataset& sub, std::uint64_t s) { return location_exact_draws(location_posterior(sub, 1.0, 10.0), m, s); },
        loss, derive_seed(seed, 3));
    const double allowance = kappa3_bound(report.kappa3) + 5.0 * std::hypot(cv.mc_se, report.mc_se.value_or(0.0));
    const double gap = std::abs(cv.value - report.pcic_gibbs);
    worst_ratio = std::max(worst_ratio, gap / allowance);
    if (gap <= allowance) ++within;
  }
  return {within == 20, std::to_string(within) + "/20 datasets within sum|kappa3|/(2n) + 5 MC SE; worst gap/allowance " +
                            num(worst_ratio)};
}

// 8 and 9 share one run -------------------------------------------------------------------
json outlier_summary() {
  const auto c = config_for("outlier", {{"seed", 808}});
  return experiments::run_outlier(c, default_threads()).summary;
}

Outcome outlier_ordering(const json& summary) {
  std::string detail;
  bool ok = true;
  for (int r = 1; r <= 6; ++r) {
    for (const std::string loss : {"l2", "scaled_l1"}) {
      if (loss == "l2" && r < 4) continue;
      const std::string setting = "R=" + std::to_string(r) + ";loss=" + loss;
      const auto& is = estimator(summary, setting, "iscv_gibbs");
      const auto& pc = estimator(summary, setting, "pcic_gibbs");
      const double iscv = std::abs(is["bias"].get<double>());
      const double pg = std::abs(pc["bias"].get<double>());
      if (iscv < pg) ok = false;
      detail += (detail.empty() ? "" : ", ") + setting + " |bias| IS-CV " + num(iscv) + " vs PCIC_G " + num(pg) +
                " (SE " + num(pc["bias_se"].get<double>()) + ")" + (iscv < pg ? " VIOLATED" : "");
    }
  }
  return {ok, detail};
}

Outcome influence_detection(const json& summary) {
  std::string detail;
  bool ok = true;
  for (const std::string loss : {"l2", "scaled_l1"}) {
    for (const auto& s : summary["settings"]) {
      if (s["setting"] != "R=6;loss=" + loss) continue;
      const double frac = s["influence_argmax_last_fraction"];
      ok = ok && frac >= 0.9;
      detail += (detail.empty() ? "" : ", ") + loss + " argmax at i=n in " + num(100 * frac) + "% (>= 90%)";
    }
  }
  return {ok && !detail.empty(), detail};
}

// 10 --------------------------------------------------------------------------------------
Outcome dp_logistic() {
  const auto c = config_for("dp_logistic", {{"seed", 1010}, {"losses", {"brier"}}, {"betas", {0.5, 1.0}}});
  const auto r = experiments::run_dp_logistic(c, default_threads());
  bool ok = true;
  std::string detail;
  for (const std::string beta : {"0.5", "1"}) {
    const std::string setting = "beta=" + beta + ";loss=brier";
    const double pg = std::abs(estimator(r.summary, setting, "pcic_gibbs")["bias"].get<double>());
    const double emp = std::abs(estimator(r.summary, setting, "empirical_gibbs")["bias"].get<double>());
    ok = ok && pg < emp;
    detail += (detail.empty() ? "" : ", ") + std::string("beta=") + beta + " |bias| PCIC_G " + num(pg) +
              " vs empirical " + num(emp);
  }
  const auto warnings = r.summary["sampler_warnings"].size();
  return {ok, detail + "; sampler warnings " + std::to_string(warnings)};
}

// 11 --------------------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Exit code, stdout with the per-run output directory masked, and the output files.
std::string run_payload(const std::vector<std::string>& args, const fs::path& out_dir,
                        const std::vector<fs::path>& outputs) {
  std::vector<const char*> argv{"pcic"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  std::string text = out.str();
  const std::string dir = out_dir.string();
  for (auto pos = text.find(dir); pos != std::string::npos; pos = text.find(dir)) text.replace(pos, dir.size(), "{out}");
  std::string payload = "exit=" + std::to_string(code) + "\n" + text;
  for (const auto& p : outputs) payload += slurp(p);
  return payload;
}

Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / "pcic_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return (dir / name).string();
  };

  struct Command {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> outputs;
  };
  std::vector<Command> commands;
  const auto loc_csv = write("loc.csv", "x1,x2\n0.3,-1.1\n1.7,0.4\n-0.2,0.9\n");
  const auto cls_csv = write("cls.csv", "label,a\n1,0.5\n0,-0.3\n1,1.2\n0,-1.0\n1,0.1\n0,0.4\n");
  const auto reg_csv = write("reg.csv", "x,y\n0.01,0.2\n0.02,-0.1\n0.03,0.5\n0.04,0.1\n3,2.5\n");
  const auto est = [&](const std::string& tag, const std::string& data, const std::string& cfg) {
    const auto cfg_path = write(tag + ".json", cfg);
    return Command{"estimate " + tag,
                   {"estimate", "--config", cfg_path, "--data", data, "--out", "{out}/report.json"},
                   {"report.json"}};
  };
  commands.push_back(est("location", loc_csv, R"({"seed": 1, "m": 500, "weights": [1, 0, 2]})"));
  commands.push_back(est("logistic", cls_csv, R"({"seed": 2, "model": "logistic", "m": 300})"));
  commands.push_back(est("regression", reg_csv, R"({"seed": 3, "model": "regression", "m": 300})"));
  const auto rep = [&](const std::string& study, const std::string& cfg) {
    const auto cfg_path = write(study + ".json", cfg);
    return Command{"replicate " + study,
                   {"replicate", study, "--config", cfg_path, "--out", "{out}"},
                   {"summary.json", "rows.csv"}};
  };
  commands.push_back(rep("location", R"({"seed": 4, "replications": 5, "n": 10, "m": 200})"));
  commands.push_back(rep("dp-logistic", R"({"seed": 5, "replications": 2, "m": 200, "burn_in": 10, "thin": 1})"));
  commands.push_back(rep("outlier", R"({"seed": 6, "replications": 2, "m": 200, "r_values": [6]})"));
  commands.push_back(rep("sensitivity", R"({"seed": 7, "replications": 2, "m": 200})"));
  commands.push_back({"check --quick", {"check", "--quick"}, {}});

  std::vector<std::string> differing;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    std::vector<std::string> payloads;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const fs::path out = dir / ("run" + std::to_string(c) + "_" + std::to_string(attempt));
      fs::create_directories(out);
      std::vector<std::string> args = commands[c].args;
      for (auto& a : args) {
        if (const auto pos = a.find("{out}"); pos != std::string::npos) a.replace(pos, 5, out.string());
      }
      std::vector<fs::path> outputs;
      for (const auto& f : commands[c].outputs) outputs.push_back(out / f);
      payloads.push_back(run_payload(args, out, outputs));
    }
    if (payloads[0] != payloads[1] || payloads[0].rfind("exit=0", 0) != 0) differing.push_back(commands[c].name);
  }
  fs::remove_all(dir);
  std::string detail = std::to_string(commands.size() - differing.size()) + "/" + std::to_string(commands.size()) +
                       " commands byte-identical on rerun";
  for (const auto& d : differing) detail += "; differs or failed: " + d;
  return {differing.empty(), detail};
}

}  // namespace

int main() {
  criterion(1, "WAIC_2 identity", 1.0, waic2_identity);
  criterion(2, "covariance closure", 30.0, covariance_closure);
  criterion(3, "gap unbiasedness", 120.0, gap_unbiasedness);
  criterion(4, "strong-prior bias and its removal", 120.0, strong_prior_bias);
  criterion(5, "finite-difference sensitivity", 30.0, lemma1);
  criterion(6, "Gaussian quadratic-form identity", 5.0, kumar);
  criterion(7, "exact LOOCV proximity", 60.0, loocv_proximity);

  json outlier;
  criterion(8, "outlier ordering", 600.0, [&] {
    outlier = outlier_summary();
    return outlier_ordering(outlier);
  });
  criterion(9, "influence detection", 600.0, [&] {
    if (outlier.is_null()) return Outcome{false, "outlier run unavailable"};
    return influence_detection(outlier);
  });
  criterion(10, "tempered logistic sanity", 300.0, dp_logistic);
  criterion(11, "determinism", 120.0, determinism);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
