#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ecmki/common.hpp"

namespace ecmki {

// Data misfit controller switches. By default H counts time steps and
// the variance term is H/(2 sigma^2); the flags select the variants.
struct DmcOptions {
  bool sqrt_variance = false;  // use H/(2 sigma) instead of H/(2 sigma^2)
  bool double_h = false;       // use the total output dimension 2H instead of H
};

struct TemperState {
  std::vector<double> alphas;

  double t() const {
    double sum = 0.0;
    for (double a : alphas) sum += a;
    return sum;
  }

  bool done() const { return t() >= 1.0 - 1e-12; }
};

// Picks the next tempering increment from the ensemble misfits, capped
// so the cumulative sum lands exactly on 1. Returns nothing once the
// schedule is complete. Zero misfit variance (or zero mean) makes the
// corresponding term infinite, so alpha takes the full remainder.
inline std::optional<double> dmc_alpha(const Eigen::VectorXd& misfits, int h,
                                       TemperState& temper,
                                       const DmcOptions& opt = {}) {
  if (misfits.size() < 2) throw SolverError("DMC needs at least 2 misfits");
  if (h < 1) throw SolverError("DMC needs a positive step count");
  const double t = temper.t();
  if (t >= 1.0 - 1e-12) return std::nullopt;

  const double h_eff = opt.double_h ? 2.0 * h : static_cast<double>(h);
  const double mean = misfits.mean();
  const double var =
      (misfits.array() - mean).square().sum() / (misfits.size() - 1);

  const double remainder = 1.0 - t;
  double alpha = remainder;
  const double mean_term = mean > 0.0 ? h_eff / (2.0 * mean)
                                      : std::numeric_limits<double>::infinity();
  const double spread = opt.sqrt_variance ? std::sqrt(var) : var;
  const double var_term = spread > 0.0 ? h_eff / (2.0 * spread)
                                       : std::numeric_limits<double>::infinity();
  const double proposed = std::max(mean_term, var_term);
  if (proposed < remainder) alpha = proposed;

  temper.alphas.push_back(alpha);
  return alpha;
}

}  // namespace ecmki
