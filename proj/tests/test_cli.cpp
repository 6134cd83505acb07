#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ecmki/cli.hpp"
#include "helpers.hpp"

using namespace ecmki;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;

namespace fs = std::filesystem;

namespace {

// Small end-to-end setup: one generated segment, 16 members, truth known.
json small_config(const test::TempDir& dir) {
  json doc;
  doc["model"] = "thevenin";
  doc["seed"] = 2;
  doc["true_params"] = {{"R_o", 0.026},   {"R_1", 0.02},    {"C_1", 3250.0},
                        {"C_core", 40.0}, {"C_surf", 10.0}, {"R_core", 4.0},
                        {"R_surf", 7.0},  {"kappa_1", 30.0}, {"kappa_2", 70.0}};
  doc["segments"] = {{{"profile", {{"duration_s", 180.0}, {"amb_step_K", 4.0}}}}};
  doc["measurements"] = {dir.file("meas0.csv")};
  doc["enki"] = {{"members", 16}, {"max_iterations", 12}};
  doc["output"] = {{"results_json", dir.file("results.json")},
                   {"measurement_csvs", {dir.file("meas0.csv")}},
                   {"cycle_csvs", {dir.file("cycle0.csv")}}};
  return doc;
}

std::string write_config(const test::TempDir& dir, const json& doc,
                         const std::string& name = "run.json") {
  test::write_file(dir.file(name), doc.dump(2));
  return dir.file(name);
}

bool no_tmp_files(const std::string& dir_path) {
  for (const auto& entry : fs::directory_iterator(dir_path))
    if (entry.path().extension() == ".tmp") return false;
  return true;
}

}  // namespace

TEST_CASE("help and usage errors", "[cli]") {
  const CommandOutcome help = run_cli({"--help"});
  CHECK(help.exit_code == 0);
  CHECK_THAT(help.summary, ContainsSubstring("simulate"));
  CHECK_THAT(help.summary, ContainsSubstring("identify"));

  CHECK(run_cli({}).exit_code == 1);
  CHECK(run_cli({"identify"}).exit_code == 1);  // --config is required
  CHECK(run_cli({"frobnicate", "--config", "x.json"}).exit_code == 1);
}

TEST_CASE("missing or broken config maps to exit 2", "[cli]") {
  test::TempDir dir("cli_cfg");
  const CommandOutcome gone =
      run_cli({"simulate", "--config", dir.file("absent.json")});
  CHECK(gone.exit_code == 2);
  CHECK_THAT(gone.summary, ContainsSubstring("cannot open config file"));

  test::write_file(dir.file("broken.json"), "{");
  CHECK(run_cli({"simulate", "--config", dir.file("broken.json")}).exit_code == 2);
}

TEST_CASE("simulate, identify, validate, report round trip", "[cli]") {
  test::TempDir dir("cli_flow");
  const std::string cfg_path = write_config(dir, small_config(dir));

  const CommandOutcome sim = run_cli({"simulate", "--config", cfg_path});
  REQUIRE(sim.exit_code == 0);
  CHECK_THAT(sim.summary, ContainsSubstring("simulated 1 segment(s)"));
  REQUIRE(sim.artifacts.size() == 2);
  CHECK(fs::exists(dir.file("meas0.csv")));
  CHECK(fs::exists(dir.file("cycle0.csv")));
  CHECK(no_tmp_files(dir.path()));

  const std::string meas_bytes = test::read_file(dir.file("meas0.csv"));
  CHECK_THAT(meas_bytes, ContainsSubstring("# config_hash=0x"));
  CHECK_THAT(meas_bytes, ContainsSubstring("# seed=2"));
  CHECK_THAT(meas_bytes, !ContainsSubstring("timestamp"));

  // Re-simulation is byte-identical.
  REQUIRE(run_cli({"simulate", "--config", cfg_path}).exit_code == 0);
  CHECK(test::read_file(dir.file("meas0.csv")) == meas_bytes);

  const CommandOutcome ident = run_cli({"identify", "--config", cfg_path});
  REQUIRE(ident.exit_code == 0);
  CHECK_THAT(ident.summary, ContainsSubstring("identified thevenin in"));
  CHECK_THAT(ident.summary, ContainsSubstring("wrote " + dir.file("results.json")));
  REQUIRE(ident.artifacts.size() == 1);
  REQUIRE(fs::exists(dir.file("results.json")));
  CHECK(no_tmp_files(dir.path()));
  CHECK(ident.payload["complete"].get<bool>());
  CHECK(ident.payload.contains("relative_error_pct"));

  std::ifstream rin(dir.file("results.json"));
  const ResultBundle bundle = read_results(rin);
  CHECK(bundle.seed == 2);
  CHECK(bundle.complete);
  CHECK(bundle.has_fit);
  CHECK(hash_hex(bundle.config_hash) == ident.payload["config_hash"]);

  // Validating the truth against its own noisy data sits at the noise floor.
  const CommandOutcome val = run_cli({"validate", "--config", cfg_path});
  REQUIRE(val.exit_code == 0);
  CHECK(val.payload["rmse_voltage_V"].get<double>() < 0.05);
  CHECK(val.payload["rmse_temp_K"].get<double>() < 0.15);
  CHECK(val.payload["samples"].get<int>() == 181);

  // Validating the estimate read back from the results document.
  const CommandOutcome val2 = run_cli(
      {"validate", "--config", cfg_path, "--params", dir.file("results.json")});
  REQUIRE(val2.exit_code == 0);
  CHECK(val2.payload["rmse_voltage_V"].get<double>() < 0.05);

  const CommandOutcome rep =
      run_cli({"report", "--config", cfg_path, "--out", dir.file("report.csv")});
  REQUIRE(rep.exit_code == 0);
  const std::string report = test::read_file(dir.file("report.csv"));
  CHECK_THAT(report, ContainsSubstring("iteration,alpha,t_after"));
  CHECK_THAT(report,
             ContainsSubstring("parameter,true,estimate,relative_error_pct"));
  REQUIRE(rep.payload.contains("comparison"));
  CHECK(rep.payload["comparison"].size() == 9);

  const CommandOutcome rep_stdout = run_cli({"report", "--config", cfg_path});
  REQUIRE(rep_stdout.exit_code == 0);
  CHECK_THAT(rep_stdout.summary, ContainsSubstring("# ensemble boxplots"));
}

TEST_CASE("noiseless data validates to zero rmse", "[cli]") {
  test::TempDir dir("cli_zero");
  json doc = small_config(dir);
  const std::string cfg_path = write_config(dir, doc);

  const RunConfig cfg = load_config(doc);
  const ForwardProblem fwd = build_forward(cfg, build_cycles(cfg));
  const Trajectory traj = fwd.trajectories(cfg.true_params)[0];
  MeasurementSeries series;
  series.time_s = traj.time_s;
  series.samples = traj.outputs;
  std::ostringstream os;
  write_measurements(series, os);
  test::write_file(dir.file("meas0.csv"), os.str());

  const CommandOutcome val = run_cli({"validate", "--config", cfg_path});
  REQUIRE(val.exit_code == 0);
  CHECK(val.payload["rmse_voltage_V"].get<double>() < 1e-12);
  CHECK(val.payload["rmse_temp_K"].get<double>() < 1e-12);
  CHECK(val.payload.contains("in_range"));
}

TEST_CASE("seed flag overrides the config seed", "[cli]") {
  test::TempDir dir("cli_seed");
  const std::string cfg_path = write_config(dir, small_config(dir));
  REQUIRE(run_cli({"simulate", "--config", cfg_path, "--seed", "7"}).exit_code == 0);
  CHECK_THAT(test::read_file(dir.file("meas0.csv")), ContainsSubstring("# seed=7"));

  REQUIRE(run_cli({"identify", "--config", cfg_path, "--seed", "7"}).exit_code == 0);
  std::ifstream rin(dir.file("results.json"));
  CHECK(read_results(rin).seed == 7);
}

TEST_CASE("identify failure surfaces as a numerical exit", "[cli]") {
  test::TempDir dir("cli_fail");
  json doc = small_config(dir);
  json zero;
  for (const auto& item : doc["true_params"].items()) zero[item.key()] = 0.0;
  doc["prior"] = {{"mean", zero}, {"sd", zero}};
  doc["enki"]["positivity"] = "none";
  const std::string cfg_path = write_config(dir, doc, "fail.json");

  REQUIRE(run_cli({"simulate", "--config", cfg_path}).exit_code == 0);
  const CommandOutcome out = run_cli({"identify", "--config", cfg_path});
  CHECK(out.exit_code == 3);
  CHECK_THAT(out.summary, ContainsSubstring("solver failure"));
}

TEST_CASE("simulate output override must cover every segment", "[cli]") {
  test::TempDir dir("cli_multi");
  json doc = small_config(dir);
  doc["segments"].push_back(doc["segments"][0]);
  doc["output"].erase("measurement_csvs");
  doc["output"].erase("cycle_csvs");
  const std::string cfg_path = write_config(dir, doc);
  const CommandOutcome out =
      run_cli({"simulate", "--config", cfg_path, "--out", dir.file("only.csv")});
  CHECK(out.exit_code == 2);
  CHECK_THAT(out.summary,
             ContainsSubstring("1 measurement outputs for 2 segments"));
  CHECK_FALSE(fs::exists(dir.file("only.csv")));
}

TEST_CASE("staged writes leave nothing behind on failure", "[cli]") {
  test::TempDir dir("cli_staged");
  json doc = small_config(dir);
  doc["segments"].push_back(doc["segments"][0]);
  // Second target's parent is a regular file, so staging it must fail
  // after the first file has already been staged.
  test::write_file(dir.file("blocker"), "occupied");
  doc["measurements"] = {dir.file("staged0.csv"), dir.file("blocker/x.csv")};
  doc["output"]["measurement_csvs"] = doc["measurements"];
  doc["output"].erase("cycle_csvs");
  const std::string cfg_path = write_config(dir, doc);

  const CommandOutcome out = run_cli({"simulate", "--config", cfg_path});
  CHECK(out.exit_code == 2);
  CHECK_FALSE(fs::exists(dir.file("staged0.csv")));
  CHECK_FALSE(fs::exists(dir.file("staged0.csv.tmp")));
  CHECK(no_tmp_files(dir.path()));
}

TEST_CASE("warnings from the config surface on the outcome", "[cli]") {
  test::TempDir dir("cli_warn");
  json doc = small_config(dir);
  doc["typo_key"] = true;
  const std::string cfg_path = write_config(dir, doc);
  const CommandOutcome out = run_cli({"simulate", "--config", cfg_path});
  REQUIRE(out.exit_code == 0);
  REQUIRE(out.warnings.size() == 1);
  CHECK_THAT(out.warnings[0], ContainsSubstring("typo_key"));
}
