#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecmki/config.hpp"
#include "ecmki/csv.hpp"
#include "ecmki/pipeline.hpp"
#include "ecmki/results.hpp"

namespace ecmki {

// Exit codes: 0 success, 1 usage error, 2 data/config error, 3
// numerical failure.
struct CommandOutcome {
  int exit_code = 0;
  std::string summary;
  std::vector<std::string> artifacts;
  std::vector<std::string> warnings;
  ordered_json payload;
};

namespace detail {

inline std::string iso_timestamp_utc() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Write-then-rename staging: nothing lands at its final path until
// every write has succeeded.
class StagedWriter {
 public:
  ~StagedWriter() {
    std::error_code ec;
    for (const auto& [tmp, target] : staged_) std::filesystem::remove(tmp, ec);
  }

  void stage(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) {
      std::error_code ec;
      fs::create_directories(target.parent_path(), ec);
    }
    fs::path tmp = target;
    tmp += ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw ConfigError("write failed on '" + tmp.string() + "'");
    staged_.emplace_back(tmp, target);
  }

  std::vector<std::string> commit() {
    std::vector<std::string> finals;
    for (const auto& [tmp, target] : staged_) {
      std::filesystem::rename(tmp, target);
      finals.push_back(target.string());
    }
    staged_.clear();
    return finals;
  }

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

struct CliOverrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string model;
  std::vector<std::string> cycles;
  std::vector<std::string> data;
  std::string out;
  std::string params;      // results document carrying theta_hat
  std::string ref_params;  // reference parameter document
};

inline RunConfig load_with_overrides(const CliOverrides& ov) {
  std::ifstream in(ov.config);
  if (!in) throw ConfigError("cannot open config file '" + ov.config + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + ov.config + "': " + e.what());
  }
  if (ov.seed) doc["seed"] = *ov.seed;
  if (!ov.model.empty()) doc["model"] = ov.model;
  if (!ov.cycles.empty()) {
    json segs = json::array();
    for (const auto& p : ov.cycles) segs.push_back({{"cycle_csv", p}});
    doc["segments"] = segs;
  }
  if (!ov.data.empty()) doc["measurements"] = ov.data;
  return load_config(doc);
}

inline std::vector<std::string> provenance_comments(const RunConfig& cfg) {
  std::vector<std::string> comments{"config_hash=" + hash_hex(cfg.config_hash),
                                    "seed=" + std::to_string(cfg.seed)};
  if (cfg.output.include_timestamp)
    comments.push_back("timestamp=" + iso_timestamp_utc());
  return comments;
}

inline Eigen::VectorXd reference_from_file(const std::string& path, ModelId model,
                                           int n_rc,
                                           std::vector<std::string>& warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("reference '" + path + "': " + e.what());
  }
  const json& obj = doc.contains("true_params") ? doc["true_params"] : doc;
  return parse_named_params(obj, model, n_rc, "true_params.", warnings);
}

inline CommandOutcome cmd_simulate(const CliOverrides& ov) {
  CommandOutcome out;
  RunConfig cfg = load_with_overrides(ov);
  out.warnings = cfg.warnings;
  ForwardProblem fwd = build_forward(cfg, build_cycles(cfg));
  const auto measurements = synthesize_measurements(cfg, fwd);

  std::vector<std::string> meas_paths = cfg.output.measurement_csvs;
  if (!ov.out.empty()) meas_paths = {ov.out};
  if (meas_paths.empty())
    for (std::size_t k = 0; k < measurements.size(); ++k)
      meas_paths.push_back("measurements_seg" + std::to_string(k) + ".csv");
  if (meas_paths.size() != measurements.size())
    throw ConfigError("config lists " + std::to_string(meas_paths.size()) +
                      " measurement outputs for " +
                      std::to_string(measurements.size()) + " segments");
  if (!cfg.output.cycle_csvs.empty() &&
      cfg.output.cycle_csvs.size() != fwd.segments.size())
    throw ConfigError("config lists " + std::to_string(cfg.output.cycle_csvs.size()) +
                      " cycle outputs for " + std::to_string(fwd.segments.size()) +
                      " segments");

  const auto comments = provenance_comments(cfg);
  StagedWriter writer;
  int total = 0;
  for (std::size_t k = 0; k < measurements.size(); ++k) {
    std::ostringstream os;
    write_measurements(measurements[k], os, comments);
    writer.stage(meas_paths[k], os.str());
    total += measurements[k].size();
  }
  for (std::size_t k = 0; k < cfg.output.cycle_csvs.size(); ++k) {
    std::ostringstream os;
    write_drive_cycle(fwd.segments[k].cycle, os, comments);
    writer.stage(cfg.output.cycle_csvs[k], os.str());
  }
  out.artifacts = writer.commit();

  out.summary = "simulated " + std::to_string(measurements.size()) +
                " segment(s), " + std::to_string(total) + " samples; wrote " +
                std::to_string(out.artifacts.size()) + " file(s)";
  out.payload["measurement_csvs"] = meas_paths;
  out.payload["samples"] = total;
  out.payload["config_hash"] = hash_hex(cfg.config_hash);
  return out;
}

inline CommandOutcome cmd_identify(const CliOverrides& ov) {
  CommandOutcome out;
  RunConfig cfg = load_with_overrides(ov);
  out.warnings = cfg.warnings;
  ForwardProblem fwd = build_forward(cfg, build_cycles(cfg));
  const auto measurements = load_measurements(cfg, fwd);
  const Eigen::VectorXd y_obs = stack_segments(measurements);

  ResultBundle bundle = identify_from_config(cfg, fwd, y_obs);
  if (cfg.output.include_timestamp) bundle.timestamp = detail::iso_timestamp_utc();

  const std::string results_path =
      ov.out.empty() ? cfg.output.results_json : ov.out;
  std::ostringstream os;
  write_results(bundle, os);
  StagedWriter writer;
  writer.stage(results_path, os.str());
  out.artifacts = writer.commit();

  std::ostringstream sum;
  sum << "identified " << to_string(cfg.model) << " in " << bundle.records.size()
      << " iteration(s)" << (bundle.complete ? "" : " (incomplete: t < 1)")
      << "; rmse_V=" << fmt_g(bundle.fit.rmse_voltage_V)
      << " V, rmse_T=" << fmt_g(bundle.fit.rmse_temp_K) << " K; wrote "
      << results_path;
  out.summary = sum.str();
  out.payload = results_json(bundle);
  return out;
}

inline CommandOutcome cmd_validate(const CliOverrides& ov) {
  CommandOutcome out;
  RunConfig cfg = load_with_overrides(ov);
  out.warnings = cfg.warnings;
  ForwardProblem fwd = build_forward(cfg, build_cycles(cfg));
  const auto measurements = load_measurements(cfg, fwd);
  const Eigen::VectorXd y_obs = stack_segments(measurements);

  Eigen::VectorXd theta;
  if (!ov.params.empty()) {
    std::ifstream in(ov.params);
    if (!in) throw ConfigError("cannot open results file '" + ov.params + "'");
    const ResultBundle bundle = read_results(in);
    if (bundle.model != cfg.model || bundle.n_rc != cfg.n_rc)
      throw SchemaError("results in '" + ov.params + "' are for model " +
                        to_string(bundle.model) + ", config says " +
                        to_string(cfg.model));
    theta = bundle.theta_hat;
  } else if (cfg.true_params.size() > 0) {
    theta = cfg.true_params;
  } else {
    throw ConfigError("validate needs --params <results.json> or 'true_params'");
  }

  const PredictResult pred = fwd.predict(theta);
  const FitMetrics fm = fit_metrics(pred.y, y_obs);
  std::ostringstream sum;
  sum << "rmse_voltage_V=" << fmt_g(fm.rmse_voltage_V)
      << " rmse_temp_K=" << fmt_g(fm.rmse_temp_K) << " over "
      << fwd.total_samples() << " samples"
      << (pred.in_range ? "" : " (state range violations flagged)");
  out.summary = sum.str();
  out.payload["rmse_voltage_V"] = fm.rmse_voltage_V;
  out.payload["rmse_temp_K"] = fm.rmse_temp_K;
  out.payload["samples"] = fwd.total_samples();
  out.payload["in_range"] = pred.in_range;
  return out;
}

inline CommandOutcome cmd_report(const CliOverrides& ov) {
  CommandOutcome out;
  RunConfig cfg = load_with_overrides(ov);
  out.warnings = cfg.warnings;

  const std::string results_path =
      ov.params.empty() ? cfg.output.results_json : ov.params;
  std::ifstream in(results_path);
  if (!in) throw ConfigError("cannot open results file '" + results_path + "'");
  const ResultBundle bundle = read_results(in);
  const auto names = param_names(bundle.model, bundle.n_rc);

  Eigen::VectorXd reference = bundle.reference;
  if (!ov.ref_params.empty())
    reference = detail::reference_from_file(ov.ref_params, bundle.model,
                                            bundle.n_rc, out.warnings);
  else if (reference.size() == 0 && cfg.true_params.size() > 0 &&
           cfg.model == bundle.model)
    reference = cfg.true_params;

  std::ostringstream text;
  text << "# iterations\n";
  text << "iteration,alpha,t_after,mean_misfit,misfit_variance,healthy,quarantined\n";
  for (const auto& rec : bundle.records)
    text << rec.iteration << ',' << fmt_double(rec.alpha) << ','
         << fmt_double(rec.t_after) << ',' << fmt_double(rec.mean_misfit) << ','
         << fmt_double(rec.misfit_variance) << ',' << rec.healthy << ','
         << rec.quarantined << '\n';

  text << "\n# ensemble boxplots\n";
  text << "parameter,iteration,q1,median,q3,whisker_low,whisker_high,n_outliers\n";
  auto boxplot_row = [&](const std::string& name, const std::string& iter,
                         const BoxplotStats& st) {
    text << name << ',' << iter << ',' << fmt_double(st.q1) << ','
         << fmt_double(st.median) << ',' << fmt_double(st.q3) << ','
         << fmt_double(st.whisker_low) << ',' << fmt_double(st.whisker_high) << ','
         << st.outliers.size() << '\n';
  };
  for (std::size_t j = 0; j < names.size(); ++j) {
    for (const auto& rec : bundle.records)
      boxplot_row(names[j], std::to_string(rec.iteration), rec.param_stats[j]);
    if (!bundle.final_param_stats.empty())
      boxplot_row(names[j], "final", bundle.final_param_stats[j]);
  }

  if (reference.size() > 0) {
    text << "\n# parameter comparison\n";
    text << "parameter,true,estimate,relative_error_pct\n";
    ordered_json comparison = ordered_json::array();
    for (std::size_t j = 0; j < names.size(); ++j) {
      const double err =
          100.0 * std::abs(bundle.theta_hat(j) - reference(j)) / std::abs(reference(j));
      text << names[j] << ',' << fmt_double(reference(j)) << ','
           << fmt_double(bundle.theta_hat(j)) << ',' << fmt_double(err) << '\n';
      comparison.push_back({{"parameter", names[j]},
                            {"true", reference(j)},
                            {"estimate", bundle.theta_hat(j)},
                            {"relative_error_pct", err}});
    }
    out.payload["comparison"] = comparison;
  }

  if (!ov.out.empty()) {
    StagedWriter writer;
    writer.stage(ov.out, text.str());
    out.artifacts = writer.commit();
    out.summary = "report written to " + ov.out;
  } else {
    out.summary = text.str();
  }
  out.payload["results"] = results_json(bundle);
  return out;
}

}  // namespace detail

inline CommandOutcome run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Coupled electro-thermal battery model simulation and "
               "ensemble-based identification"};
  app.require_subcommand(1);
  detail::CliOverrides ov;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", ov.config, "JSON run configuration")->required();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { ov.seed = v; }, "Master seed override");
    sub->add_option("--model", ov.model, "Model override: thevenin | ndct");
    sub->add_option("--cycle", ov.cycles,
                    "Cycle CSV override; repeat for multiple segments");
    sub->add_option("--data", ov.data,
                    "Measurement CSV override; repeat per segment");
  };

  CLI::App* sim = app.add_subcommand(
      "simulate", "Generate noisy synthetic measurements from the truth");
  add_common(sim);
  sim->add_option("--out", ov.out, "Measurement CSV target (single segment)");

  CLI::App* ident = app.add_subcommand(
      "identify", "Estimate parameters from cycle and measurement data");
  add_common(ident);
  ident->add_option("--out", ov.out, "Results JSON target");

  CLI::App* val = app.add_subcommand(
      "validate", "Forward-simulate an estimate and report fit RMSE");
  add_common(val);
  val->add_option("--params", ov.params, "Results JSON carrying the estimate");

  CLI::App* rep = app.add_subcommand(
      "report", "Emit iteration, boxplot, and comparison tables");
  add_common(rep);
  rep->add_option("--params", ov.params, "Results JSON to report on");
  rep->add_option("--out", ov.out, "Write tables to this file");
  rep->add_option("--ref-params", ov.ref_params,
                  "Reference parameter JSON for the comparison table");

  std::vector<const char*> argv;
  argv.push_back("ecmki");
  for (const auto& a : args) argv.push_back(a.c_str());

  CommandOutcome out;
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out.summary = app.help();
    return out;
  } catch (const CLI::ParseError& e) {
    out.exit_code = 1;
    out.summary = std::string(e.what()) + "\n\n" + app.help();
    return out;
  }

  try {
    if (sim->parsed()) return detail::cmd_simulate(ov);
    if (ident->parsed()) return detail::cmd_identify(ov);
    if (val->parsed()) return detail::cmd_validate(ov);
    return detail::cmd_report(ov);
  } catch (const SolverError& e) {
    out.exit_code = 3;
    out.summary = std::string("solver failure: ") + e.what();
  } catch (const SimulationError& e) {
    out.exit_code = 3;
    out.summary = std::string("simulation failure: ") + e.what();
  } catch (const ConfigError& e) {
    out.exit_code = 2;
    out.summary = std::string("config error: ") + e.what();
  } catch (const ParseError& e) {
    out.exit_code = 2;
    out.summary = std::string("data error: ") + e.what();
  } catch (const SchemaError& e) {
    out.exit_code = 2;
    out.summary = std::string("schema error: ") + e.what();
  } catch (const std::invalid_argument& e) {
    out.exit_code = 2;
    out.summary = std::string("invalid value: ") + e.what();
  } catch (const std::exception& e) {
    out.exit_code = 3;
    out.summary = std::string("internal error: ") + e.what();
  }
  return out;
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const CommandOutcome out = run_cli(args);
  for (const auto& w : out.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  if (out.exit_code == 0) {
    std::fprintf(stdout, "%s\n", out.summary.c_str());
  } else {
    std::fprintf(stderr, "%s\n", out.summary.c_str());
  }
  return out.exit_code;
}

}  // namespace ecmki
