#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "ecmki/common.hpp"
#include "ecmki/rng.hpp"

namespace ecmki {

// Uniformly sampled input sequence u_k = [I_k, T_amb,k]. Positive current
// charges the cell, negative current discharges it.
struct DriveCycle {
  std::vector<double> time_s;
  std::vector<InputSample> inputs;

  int size() const { return static_cast<int>(time_s.size()); }

  double dt() const {
    if (size() < 2) throw SchemaError("drive cycle needs at least 2 samples");
    return time_s[1] - time_s[0];
  }

  double duration() const { return time_s.back() - time_s.front(); }

  void validate(double max_current_A = 4.0) const {
    if (time_s.size() != inputs.size())
      throw SchemaError("drive cycle has " + std::to_string(time_s.size()) +
                        " timestamps but " + std::to_string(inputs.size()) +
                        " input samples");
    const double step = dt();
    if (!(step > 0.0)) throw SchemaError("drive cycle timestamps must increase");
    const double tol = 1e-9 * step;
    for (std::size_t k = 1; k < time_s.size(); ++k) {
      const double gap = time_s[k] - time_s[k - 1];
      if (std::abs(gap - step) > tol)
        throw SchemaError("drive cycle spacing is not uniform at sample " +
                          std::to_string(k) + ": gap " + std::to_string(gap) +
                          " s vs step " + std::to_string(step) + " s");
    }
    for (std::size_t k = 0; k < inputs.size(); ++k) {
      if (!std::isfinite(inputs[k].current_A) || !std::isfinite(inputs[k].amb_temp_K))
        throw SchemaError("drive cycle sample " + std::to_string(k) +
                          " is not finite");
      if (std::abs(inputs[k].current_A) > max_current_A + 1e-12)
        throw SchemaError("drive cycle current " +
                          std::to_string(inputs[k].current_A) +
                          " A at sample " + std::to_string(k) +
                          " exceeds the " + std::to_string(max_current_A) +
                          " A limit");
    }
  }
};

inline DriveCycle constant_cycle(double duration_s, double dt_s, double current_A,
                                 double amb_temp_K) {
  const int h = static_cast<int>(std::llround(duration_s / dt_s)) + 1;
  DriveCycle cycle;
  cycle.time_s.resize(h);
  cycle.inputs.assign(h, InputSample{current_A, amb_temp_K});
  for (int k = 0; k < h; ++k) cycle.time_s[k] = k * dt_s;
  return cycle;
}

// Stand-in for licensed regulatory cycles: a pulse train with a chosen
// charge/discharge mix plus a smoothed random component, shaped by a
// piecewise-constant power envelope (including rest phases, which let
// the cell relax) and clipped to the amplitude cap. The envelope varies
// the dissipated power across the segment so the slow thermal response
// is probed at several levels, not just one duty cycle.
struct ProfileSpec {
  double duration_s = 900.0;
  double dt_s = 1.0;
  double amb_temp_K = 298.15;
  double amplitude_cap_A = 4.0;
  double pulse_amplitude_A = 3.5;
  double pulse_period_s = 60.0;
  double pulse_duty = 0.5;        // active fraction of each period
  double charge_fraction = 0.25;  // fraction of active periods that charge
  double random_amplitude_A = 1.2;
  int smooth_window = 4;          // moving-average half width, in samples
  int n_phases = 6;               // envelope phases; 0 disables the envelope
  double rest_fraction = 0.15;    // fraction of phases with zero current
  double amb_step_K = 0.0;        // chamber setpoint step over the middle third
};

inline DriveCycle synth_profile(const ProfileSpec& spec, std::uint64_t seed) {
  if (!(spec.dt_s > 0.0)) throw ConfigError("profile dt must be positive");
  const double steps = spec.duration_s / spec.dt_s;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("profile duration " + std::to_string(spec.duration_s) +
                      " s is not a multiple of dt " + std::to_string(spec.dt_s) +
                      " s");
  if (!(spec.amplitude_cap_A > 0.0))
    throw ConfigError("profile amplitude cap must be positive");
  if (spec.pulse_duty < 0.0 || spec.pulse_duty > 1.0)
    throw ConfigError("pulse duty must lie in [0, 1]");
  if (spec.charge_fraction < 0.0 || spec.charge_fraction > 1.0)
    throw ConfigError("charge fraction must lie in [0, 1]");
  if (spec.n_phases < 0) throw ConfigError("phase count must be non-negative");
  if (spec.rest_fraction < 0.0 || spec.rest_fraction >= 1.0)
    throw ConfigError("rest fraction must lie in [0, 1)");

  const int h = static_cast<int>(std::llround(steps)) + 1;
  std::vector<double> current(h, 0.0);

  // Piecewise-constant envelope: one rest level per rest_fraction share,
  // the remaining phases spread evenly over [0.25, 1], in shuffled order
  // with slightly randomized phase lengths. Each phase also gets its own
  // pulse period (base period scaled by 1/3, 1, or 3) so the transient
  // time scales of the cell are probed at several pulse widths.
  std::vector<int> bounds{0, h};
  std::vector<double> levels{1.0};
  std::vector<double> period_scale{1.0};
  std::vector<double> duty_scale{1.0};
  if (spec.n_phases > 0) {
    auto erng = make_rng(derive_seed(seed, RngStream::profile, 1));
    std::uniform_real_distribution<double> unif01(0.0, 1.0);
    const int n_rest = std::min(
        spec.n_phases - 1,
        static_cast<int>(std::llround(spec.rest_fraction * spec.n_phases)));
    const int n_active = spec.n_phases - n_rest;
    levels.assign(spec.n_phases, 0.0);
    for (int j = 0; j < n_active; ++j)
      levels[n_rest + j] =
          n_active == 1 ? 1.0 : 0.25 + 0.75 * j / (n_active - 1);
    for (int i = spec.n_phases - 1; i > 0; --i) {
      const int j = static_cast<int>(erng() % static_cast<std::uint64_t>(i + 1));
      std::swap(levels[i], levels[j]);
    }
    const double scales[3] = {1.0, 1.0 / 3.0, 3.0};
    period_scale.resize(spec.n_phases);
    for (int p = 0; p < spec.n_phases; ++p) period_scale[p] = scales[p % 3];
    for (int i = spec.n_phases - 1; i > 0; --i) {
      const int j = static_cast<int>(erng() % static_cast<std::uint64_t>(i + 1));
      std::swap(period_scale[i], period_scale[j]);
    }
    const double duty_scales[3] = {1.0, 0.7, 1.3};
    duty_scale.resize(spec.n_phases);
    for (int p = 0; p < spec.n_phases; ++p) duty_scale[p] = duty_scales[p % 3];
    for (int i = spec.n_phases - 1; i > 0; --i) {
      const int j = static_cast<int>(erng() % static_cast<std::uint64_t>(i + 1));
      std::swap(duty_scale[i], duty_scale[j]);
    }
    std::vector<double> weights(spec.n_phases);
    double total = 0.0;
    for (double& w : weights) {
      w = 0.5 + unif01(erng);
      total += w;
    }
    bounds.assign(1, 0);
    double acc = 0.0;
    for (int p = 0; p < spec.n_phases; ++p) {
      acc += weights[p];
      int end = p + 1 == spec.n_phases
                    ? h
                    : static_cast<int>(std::llround(h * acc / total));
      end = std::max(end, bounds.back());
      bounds.push_back(std::min(end, h));
    }
  }
  std::vector<double> env(h, 1.0);
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p)
    for (int k = bounds[p]; k < bounds[p + 1]; ++k) env[k] = levels[p];

  // Pulse train, phase by phase; charging periods are spread evenly
  // through the train by a running accumulator.
  double charge_acc = 0.0;
  for (std::size_t p = 0; p + 1 < bounds.size(); ++p) {
    const int period_steps = std::max(
        1, static_cast<int>(std::llround(period_scale[p] * spec.pulse_period_s /
                                         spec.dt_s)));
    const double duty = std::min(1.0, duty_scale[p] * spec.pulse_duty);
    const int active_steps = static_cast<int>(std::llround(duty * period_steps));
    for (int start = bounds[p]; start < bounds[p + 1]; start += period_steps) {
      charge_acc += spec.charge_fraction;
      double sign = -1.0;
      if (charge_acc >= 1.0 - 1e-12) {
        sign = 1.0;
        charge_acc -= 1.0;
      }
      for (int k = start; k < std::min(bounds[p + 1], start + active_steps); ++k)
        current[k] = sign * spec.pulse_amplitude_A;
    }
  }

  if (spec.random_amplitude_A > 0.0) {
    auto rng = make_rng(derive_seed(seed, RngStream::profile));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> white(h);
    for (double& w : white) w = unif(rng);
    const int win = std::max(0, spec.smooth_window);
    for (int k = 0; k < h; ++k) {
      double acc = 0.0;
      int count = 0;
      for (int j = std::max(0, k - win); j <= std::min(h - 1, k + win); ++j) {
        acc += white[j];
        ++count;
      }
      current[k] += spec.random_amplitude_A * acc / count;
    }
  }

  DriveCycle cycle;
  cycle.time_s.resize(h);
  cycle.inputs.resize(h);
  for (int k = 0; k < h; ++k) {
    cycle.time_s[k] = k * spec.dt_s;
    double i = env[k] * current[k];
    if (i > spec.amplitude_cap_A) i = spec.amplitude_cap_A;
    if (i < -spec.amplitude_cap_A) i = -spec.amplitude_cap_A;
    // The ambient (chamber setpoint) steps up over the middle third of
    // the segment; the down-step exposes the thermal relaxation, which
    // separates the core/surface heat capacities from the resistances.
    double amb = spec.amb_temp_K;
    if (spec.amb_step_K != 0.0 && 3 * k > h && 3 * k < 2 * h)
      amb += spec.amb_step_K;
    cycle.inputs[k] = InputSample{i, amb};
  }
  return cycle;
}

}  // namespace ecmki
