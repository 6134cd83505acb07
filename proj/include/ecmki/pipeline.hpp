#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "ecmki/config.hpp"
#include "ecmki/csv.hpp"
#include "ecmki/forward.hpp"
#include "ecmki/identify.hpp"
#include "ecmki/measurement.hpp"
#include "ecmki/results.hpp"
#include "ecmki/rng.hpp"

namespace ecmki {

// Materializes every configured segment: CSV segments are parsed and
// validated, profile segments are generated deterministically from the
// master seed and the segment index.
inline std::vector<DriveCycle> build_cycles(const RunConfig& cfg) {
  std::vector<DriveCycle> cycles;
  cycles.reserve(cfg.segments.size());
  for (std::size_t k = 0; k < cfg.segments.size(); ++k) {
    const auto& seg = cfg.segments[k];
    DriveCycle cycle;
    if (seg.profile) {
      cycle = synth_profile(*seg.profile,
                            derive_seed(cfg.seed, RngStream::profile, k));
    } else {
      std::ifstream in(seg.cycle_csv);
      if (!in)
        throw ConfigError("cannot open cycle file '" + seg.cycle_csv + "'");
      try {
        cycle = parse_drive_cycle(in, cfg.default_amb_K);
      } catch (const ParseError& e) {
        throw ParseError(seg.cycle_csv + ": " + e.what(), e.row);
      }
    }
    cycle.validate(cfg.fixed.max_current_A);
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

inline ForwardProblem build_forward(const RunConfig& cfg,
                                    std::vector<DriveCycle> cycles) {
  ForwardProblem fwd;
  fwd.model = cfg.model;
  fwd.n_rc = cfg.n_rc;
  fwd.fixed = cfg.fixed;
  fwd.dt_internal = cfg.dt_internal;
  fwd.segments.reserve(cycles.size());
  for (auto& c : cycles) fwd.segments.push_back(Segment{std::move(c), {}});
  return fwd;
}

// Per-segment noisy data from the configured truth, one independent
// noise stream per segment.
inline std::vector<MeasurementSeries> synthesize_measurements(
    const RunConfig& cfg, const ForwardProblem& fwd) {
  if (cfg.true_params.size() == 0)
    throw ConfigError("simulate needs 'true_params'");
  const ModelParams params = unpack_params(cfg.model, cfg.true_params, cfg.n_rc);
  std::vector<MeasurementSeries> out;
  out.reserve(fwd.segments.size());
  for (std::size_t k = 0; k < fwd.segments.size(); ++k) {
    const auto& seg = fwd.segments[k];
    const Trajectory traj =
        simulate(params, cfg.fixed, seg.cycle, fwd.segment_x0(seg), cfg.dt_internal);
    out.push_back(add_noise(traj, cfg.noise,
                            derive_seed(cfg.seed, RngStream::data_noise, k)));
  }
  return out;
}

inline std::vector<MeasurementSeries> load_measurements(
    const RunConfig& cfg, const ForwardProblem& fwd) {
  if (cfg.measurement_csvs.size() != fwd.segments.size())
    throw ConfigError("config lists " + std::to_string(cfg.measurement_csvs.size()) +
                      " measurement files for " +
                      std::to_string(fwd.segments.size()) + " segments");
  std::vector<MeasurementSeries> out;
  out.reserve(fwd.segments.size());
  for (std::size_t k = 0; k < fwd.segments.size(); ++k) {
    std::ifstream in(cfg.measurement_csvs[k]);
    if (!in)
      throw ConfigError("cannot open measurement file '" +
                        cfg.measurement_csvs[k] + "'");
    MeasurementSeries series;
    try {
      series = read_measurements(in);
    } catch (const ParseError& e) {
      throw ParseError(cfg.measurement_csvs[k] + ": " + e.what(), e.row);
    }
    if (series.size() != fwd.segments[k].cycle.size())
      throw SchemaError("'" + cfg.measurement_csvs[k] + "' has " +
                        std::to_string(series.size()) + " samples but its cycle has " +
                        std::to_string(fwd.segments[k].cycle.size()));
    out.push_back(std::move(series));
  }
  return out;
}

inline Eigen::VectorXd stack_segments(const std::vector<MeasurementSeries>& series) {
  Eigen::Index total = 0;
  for (const auto& s : series) total += 2 * s.size();
  Eigen::VectorXd y(total);
  Eigen::Index offset = 0;
  for (const auto& s : series) {
    y.segment(offset, 2 * s.size()) = stack(s);
    offset += 2 * s.size();
  }
  return y;
}

// Full identification pass from a loaded configuration plus observed
// data, packaged with provenance and fit quality.
inline ResultBundle identify_from_config(const RunConfig& cfg,
                                         const ForwardProblem& fwd,
                                         const Eigen::VectorXd& y_obs) {
  const PriorSpec prior = build_prior(cfg);
  const IdentifyResult res =
      run_identification(fwd, y_obs, prior, cfg.solver_noise, cfg.enki);
  ResultBundle bundle;
  bundle.model = cfg.model;
  bundle.n_rc = cfg.n_rc;
  bundle.theta_hat = res.theta_hat;
  bundle.records = res.records;
  bundle.final_param_stats = res.final_param_stats;
  bundle.alphas = res.alphas;
  bundle.reference = cfg.true_params;
  bundle.complete = res.complete;
  bundle.config_hash = cfg.config_hash;
  bundle.seed = cfg.seed;
  bundle.fit = fit_metrics(fwd.predict(res.theta_hat).y, y_obs);
  bundle.has_fit = true;
  return bundle;
}

}  // namespace ecmki
