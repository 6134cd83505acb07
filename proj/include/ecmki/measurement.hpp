#pragma once

#include <Eigen/Core>
#include <random>
#include <string>
#include <vector>

#include "ecmki/common.hpp"
#include "ecmki/rng.hpp"
#include "ecmki/simulate.hpp"

namespace ecmki {

// Additive Gaussian measurement noise; per-step covariance is
// diag(var_voltage, var_temp) and the stacked covariance is block
// diagonal over the H samples.
struct NoiseSpec {
  double var_voltage = 1e-4;  // V^2
  double var_temp = 1e-3;     // K^2

  bool valid() const { return var_voltage > 0.0 && var_temp > 0.0; }
};

struct MeasurementSeries {
  std::vector<double> time_s;
  std::vector<OutputSample> samples;

  int size() const { return static_cast<int>(samples.size()); }
};

namespace detail {
inline double maybe_normal(std::mt19937_64& rng, double var) {
  if (!(var > 0.0)) return 0.0;
  std::normal_distribution<double> d(0.0, std::sqrt(var));
  return d(rng);
}
}  // namespace detail

inline MeasurementSeries add_noise(const Trajectory& traj, const NoiseSpec& noise,
                                   std::uint64_t seed) {
  auto rng = make_rng(seed);
  MeasurementSeries out;
  out.time_s = traj.time_s;
  out.samples.resize(traj.outputs.size());
  for (std::size_t k = 0; k < traj.outputs.size(); ++k) {
    out.samples[k].voltage_V =
        traj.outputs[k].voltage_V + detail::maybe_normal(rng, noise.var_voltage);
    out.samples[k].surf_temp_K =
        traj.outputs[k].surf_temp_K + detail::maybe_normal(rng, noise.var_temp);
  }
  return out;
}

// Step-major stacking: [V_1, T_1, V_2, T_2, ...].
inline Eigen::VectorXd stack(const MeasurementSeries& series) {
  Eigen::VectorXd y(2 * series.size());
  for (int k = 0; k < series.size(); ++k) {
    y(2 * k) = series.samples[k].voltage_V;
    y(2 * k + 1) = series.samples[k].surf_temp_K;
  }
  return y;
}

inline Eigen::VectorXd stack_outputs(const std::vector<OutputSample>& outputs) {
  Eigen::VectorXd y(2 * static_cast<Eigen::Index>(outputs.size()));
  for (std::size_t k = 0; k < outputs.size(); ++k) {
    y(2 * k) = outputs[k].voltage_V;
    y(2 * k + 1) = outputs[k].surf_temp_K;
  }
  return y;
}

inline MeasurementSeries unstack(const Eigen::VectorXd& y,
                                 const std::vector<double>& time_s) {
  if (y.size() != 2 * static_cast<Eigen::Index>(time_s.size()))
    throw SchemaError("stacked vector of length " + std::to_string(y.size()) +
                      " does not match " + std::to_string(time_s.size()) +
                      " sample times");
  MeasurementSeries out;
  out.time_s = time_s;
  out.samples.resize(time_s.size());
  for (std::size_t k = 0; k < time_s.size(); ++k) {
    out.samples[k].voltage_V = y(2 * k);
    out.samples[k].surf_temp_K = y(2 * k + 1);
  }
  return out;
}

// Diagonal of R = I_H kron diag(var_V, var_T).
inline Eigen::VectorXd stacked_noise_variance(const NoiseSpec& noise, int h) {
  Eigen::VectorXd r(2 * h);
  for (int k = 0; k < h; ++k) {
    r(2 * k) = noise.var_voltage;
    r(2 * k + 1) = noise.var_temp;
  }
  return r;
}

inline void perturb_stacked(Eigen::VectorXd& y, const NoiseSpec& noise,
                            std::mt19937_64& rng) {
  for (Eigen::Index k = 0; 2 * k < y.size(); ++k) {
    y(2 * k) += detail::maybe_normal(rng, noise.var_voltage);
    y(2 * k + 1) += detail::maybe_normal(rng, noise.var_temp);
  }
}

}  // namespace ecmki
