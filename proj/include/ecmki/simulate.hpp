#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/drive_cycle.hpp"
#include "ecmki/model.hpp"
#include "ecmki/rk4.hpp"

namespace ecmki {

struct Trajectory {
  std::vector<double> time_s;
  std::vector<Eigen::VectorXd> states;
  std::vector<OutputSample> outputs;
  std::vector<bool> in_range;

  int size() const { return static_cast<int>(time_s.size()); }

  bool all_in_range() const {
    for (bool ok : in_range)
      if (!ok) return false;
    return true;
  }
};

inline int substeps_per_sample(double dt_sample, double dt_internal) {
  if (!(dt_internal > 0.0)) throw ConfigError("dt_internal must be positive");
  const double ratio = dt_sample / dt_internal;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio)
    throw ConfigError("dt_internal " + std::to_string(dt_internal) +
                      " s does not divide the sample interval " +
                      std::to_string(dt_sample) + " s");
  return static_cast<int>(rounded);
}

// Integrates the model over the cycle with RK4 substeps, recording the
// state and noiseless output at every sample instant. Out-of-range
// states (SoC or capacitor charge beyond [0, 1]) are flagged, not
// clamped. A non-finite state, or a model domain guard tripped by a
// diverging state, surfaces as SimulationError with the sample index.
inline Trajectory simulate(const ModelParams& params, const FixedParams& fixed,
                           const DriveCycle& cycle, const Eigen::VectorXd& x0,
                           double dt_internal) {
  const int h = cycle.size();
  if (h < 2) throw SchemaError("drive cycle needs at least 2 samples");
  const int nx = model_state_dim(params);
  if (x0.size() != nx)
    throw SchemaError("initial state has length " + std::to_string(x0.size()) +
                      ", expected " + std::to_string(nx));
  const int substeps = substeps_per_sample(cycle.dt(), dt_internal);
  const double dt_sub = cycle.dt() / substeps;

  Trajectory traj;
  traj.time_s = cycle.time_s;
  traj.states.resize(h);
  traj.outputs.resize(h);
  traj.in_range.resize(h);

  Rk4Workspace ws;
  ws.resize(nx);
  auto deriv = [&](const Eigen::VectorXd& x, const InputSample& u,
                   Eigen::VectorXd& dxdt) {
    model_derivatives(params, fixed, x, u, dxdt);
  };

  Eigen::VectorXd x = x0;
  for (int k = 0; k < h; ++k) {
    if (!x.allFinite())
      throw SimulationError("state is not finite at sample " + std::to_string(k), k);
    traj.states[k] = x;
    try {
      traj.outputs[k] = model_output(params, fixed, x, cycle.inputs[k]);
      traj.in_range[k] = model_in_range(params, x);
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError("model evaluation failed at sample " +
                                std::to_string(k) + ": " + e.what(),
                            k);
    }
    if (!std::isfinite(traj.outputs[k].voltage_V) ||
        !std::isfinite(traj.outputs[k].surf_temp_K))
      throw SimulationError("output is not finite at sample " + std::to_string(k),
                            k);
    if (k + 1 < h) {
      try {
        for (int s = 0; s < substeps; ++s)
          rk4_step(deriv, x, cycle.inputs[k], dt_sub, ws);
      } catch (const SimulationError&) {
        throw;
      } catch (const std::exception& e) {
        throw SimulationError("model evaluation failed at sample " +
                                  std::to_string(k + 1) + ": " + e.what(),
                              k + 1);
      }
    }
  }
  return traj;
}

inline Trajectory simulate(const ModelParams& params, const FixedParams& fixed,
                           const DriveCycle& cycle, double dt_internal) {
  const ModelId id = model_id(params);
  const int n_rc = id == ModelId::thevenin
                       ? std::get<TheveninParams>(params).n_rc()
                       : 1;
  return simulate(params, fixed, cycle,
                  initial_state(id, n_rc, cycle.inputs.front().amb_temp_K),
                  dt_internal);
}

}  // namespace ecmki
