#pragma once

// The `pcic` command line: estimate, replicate and check. `run` is callable from tests; it
// never calls std::exit and reports through the supplied streams.

#include <pcic/check_suite.hpp>
#include <pcic/cli/estimate.hpp>
#include <pcic/experiments.hpp>
#include <pcic/io/config.hpp>
#include <pcic/io/csv.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace pcic::cli {

enum ExitCode : int { kSuccess = 0, kUsageOrIo = 1, kCheckFailure = 2, kSamplerFailure = 3 };

namespace detail {

inline std::string replicate_experiment(const std::string& name) {
  static const std::map<std::string, std::string> names{
      {"location", "location"}, {"dp-logistic", "dp_logistic"}, {"outlier", "outlier"}, {"sensitivity", "sensitivity"}};
  return names.at(name);
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::string output_path(const std::string& flag, const io::ExperimentConfig& c) {
  if (!flag.empty()) return flag;
  if (!c.output.empty()) return c.output;
  throw io::ConfigError("no output path: pass --out or set 'output' in the config");
}

inline std::size_t thread_count(int requested) {
  return requested > 0 ? static_cast<std::size_t>(requested) : default_threads();
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Posterior covariance information criteria: estimation, replication studies and self-checks", "pcic"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Maximum worker threads (default: all cores)")->check(CLI::NonNegativeNumber);

  auto* est = app.add_subcommand("estimate", "Estimate generalization errors for a dataset");
  std::string est_config;
  std::string est_data;
  std::string est_out;
  std::string est_draws;
  est->add_option("--config", est_config, "Experiment config (JSON)")->required();
  est->add_option("--data", est_data, "Dataset (CSV with header row)")->required();
  est->add_option("--out", est_out, "Report path (JSON); defaults to the config's output");
  est->add_option("--draws-out", est_draws, "Also write the posterior draws (CSV)");

  auto* rep = app.add_subcommand("replicate", "Run a replication study");
  std::string rep_name;
  std::string rep_config;
  std::string rep_out;
  rep->add_option("experiment", rep_name, "Study to run")
      ->required()
      ->check(CLI::IsMember({"location", "dp-logistic", "outlier", "sensitivity"}));
  rep->add_option("--config", rep_config, "Experiment config (JSON)")->required();
  rep->add_option("--out", rep_out, "Output directory; defaults to the config's output");

  auto* chk = app.add_subcommand("check", "Run the analytic self-check suite");
  bool quick = false;
  checks::CheckOptions check_options;
  chk->add_flag("--quick", quick, "Fewer draws and widened tolerances");
  chk->add_option("--seed", check_options.seed, "Seed for the check suite");
  chk->add_option("--fault-a-factor", check_options.a_factor_scale)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageOrIo;
  }
  const std::size_t workers = detail::thread_count(threads);

  try {
    if (*est) {
      const auto config = io::read_config(est_config, std::string("estimate"));
      const std::string report_path = detail::output_path(est_out, config);
      const auto result = estimate(config, io::read_csv(est_data));
      io::write_text(report_path, detail::dump(result.report));
      if (!est_draws.empty()) {
        std::vector<std::string> header;
        for (std::size_t j = 0; j < result.draws.dim(); ++j) header.push_back("theta" + std::to_string(j + 1));
        io::write_text(est_draws, io::to_csv(result.draws.matrix(), header));
      }
      for (const auto& w : result.draws.provenance().warnings) err << "warning: " << w << "\n";
      out << "pcic_gibbs " << io::format_double(result.report["report"]["pcic_gibbs"].get<double>()) << "\n";
      return kSuccess;
    }
    if (*rep) {
      const auto config = io::read_config(rep_config, detail::replicate_experiment(rep_name));
      const std::string dir_name = detail::output_path(rep_out, config);
      const auto result = experiments::run_experiment(config, workers);
      std::error_code ec;
      std::filesystem::create_directories(dir_name, ec);
      if (ec) throw io::IoError("cannot create output directory '" + dir_name + "': " + ec.message());
      const std::filesystem::path dir(dir_name);
      io::write_text((dir / "summary.json").string(), detail::dump(result.summary));
      io::write_text((dir / "rows.csv").string(), result.csv);
      out << "wrote " << (dir / "summary.json").string() << " and " << (dir / "rows.csv").string() << "\n";
      return kSuccess;
    }
    check_options.quick = quick;
    bool all = true;
    for (const auto& r : checks::run_checks(check_options)) {
      out << checks::format_result(r) << "\n";
      all = all && r.passed;
    }
    out << (all ? "all checks passed" : "check suite FAILED") << "\n";
    return all ? kSuccess : kCheckFailure;
  } catch (const SamplerError& e) {
    err << "sampler failure: " << e.what() << "\n";
    return kSamplerFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageOrIo;
  }
}

}  // namespace pcic::cli
