#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/drive_cycle.hpp"
#include "ecmki/measurement.hpp"
#include "ecmki/model.hpp"
#include "ecmki/simulate.hpp"

namespace ecmki {

// One excitation segment. An empty x0 means the model's default initial
// state at the segment's starting ambient temperature (fully charged,
// relaxed, isothermal).
struct Segment {
  DriveCycle cycle;
  Eigen::VectorXd x0;
};

struct PredictResult {
  Eigen::VectorXd y;  // stacked [V, T_s] over all segments
  bool in_range = true;
};

// Deterministic parameter-to-output map G: theta -> stacked outputs over
// every segment, each segment integrated from its own initial state.
struct ForwardProblem {
  ModelId model = ModelId::thevenin;
  int n_rc = 1;
  FixedParams fixed;
  double dt_internal = 1.0;
  std::vector<Segment> segments;

  int total_samples() const {
    int h = 0;
    for (const auto& seg : segments) h += seg.cycle.size();
    return h;
  }

  int param_size() const { return param_dim(model, n_rc); }

  Eigen::VectorXd segment_x0(const Segment& seg) const {
    if (seg.x0.size() > 0) return seg.x0;
    return initial_state(model, n_rc, seg.cycle.inputs.front().amb_temp_K);
  }

  PredictResult predict(const Eigen::VectorXd& theta) const {
    if (segments.empty()) throw ConfigError("forward problem has no segments");
    const ModelParams params = unpack_params(model, theta, n_rc);
    PredictResult res;
    res.y.resize(2 * total_samples());
    Eigen::Index offset = 0;
    for (const auto& seg : segments) {
      const Trajectory traj =
          simulate(params, fixed, seg.cycle, segment_x0(seg), dt_internal);
      res.in_range = res.in_range && traj.all_in_range();
      for (int k = 0; k < traj.size(); ++k) {
        res.y(offset + 2 * k) = traj.outputs[k].voltage_V;
        res.y(offset + 2 * k + 1) = traj.outputs[k].surf_temp_K;
      }
      offset += 2 * traj.size();
    }
    return res;
  }

  std::vector<Trajectory> trajectories(const Eigen::VectorXd& theta) const {
    const ModelParams params = unpack_params(model, theta, n_rc);
    std::vector<Trajectory> out;
    out.reserve(segments.size());
    for (const auto& seg : segments)
      out.push_back(simulate(params, fixed, seg.cycle, segment_x0(seg), dt_internal));
    return out;
  }
};

struct FitMetrics {
  double rmse_voltage_V = 0.0;
  double rmse_temp_K = 0.0;
};

inline FitMetrics fit_metrics(const Eigen::VectorXd& predicted,
                              const Eigen::VectorXd& observed) {
  if (predicted.size() != observed.size() || predicted.size() % 2 != 0)
    throw SchemaError("prediction length " + std::to_string(predicted.size()) +
                      " does not match observation length " +
                      std::to_string(observed.size()));
  const Eigen::Index h = predicted.size() / 2;
  double sv = 0.0;
  double st = 0.0;
  for (Eigen::Index k = 0; k < h; ++k) {
    const double dv = predicted(2 * k) - observed(2 * k);
    const double dt = predicted(2 * k + 1) - observed(2 * k + 1);
    sv += dv * dv;
    st += dt * dt;
  }
  return {std::sqrt(sv / h), std::sqrt(st / h)};
}

}  // namespace ecmki
