#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "ecmki/boxplot.hpp"
#include "ecmki/common.hpp"
#include "ecmki/enki.hpp"
#include "ecmki/ensemble.hpp"
#include "ecmki/forward.hpp"
#include "ecmki/measurement.hpp"
#include "ecmki/rng.hpp"
#include "ecmki/temper.hpp"

namespace ecmki {

struct IterationRecord {
  int iteration = 0;
  double alpha = 0.0;
  double t_after = 0.0;
  double mean_misfit = 0.0;
  double misfit_variance = 0.0;
  int healthy = 0;
  int quarantined = 0;
  std::vector<BoxplotStats> param_stats;
};

struct IdentifyOptions {
  int members = 200;
  int max_iterations = 20;
  bool perturb_predictions = true;
  bool log_space = false;  // run the update on log(theta)
  DmcOptions dmc;
  int quarantine_retries = 3;
  int threads = 1;  // 0 picks the hardware count
  std::uint64_t seed = 0;
};

struct IdentifyResult {
  Eigen::VectorXd theta_hat;
  std::vector<IterationRecord> records;
  std::vector<double> alphas;
  bool complete = false;
  int iterations = 0;
  std::vector<BoxplotStats> final_param_stats;
};

namespace detail {

template <typename F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) f(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Redraws member i from the Gaussian fitted to the healthy members.
inline void quarantine_member(Ensemble& ens, int i, std::uint64_t seed) {
  const EnsembleStats st = ensemble_stats(ens);
  const Eigen::MatrixXd sqrt_cov = psd_sqrt(st.cov_theta());
  auto rng = make_rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::VectorXd z(ens.theta.rows());
  for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = unit(rng);
  ens.theta.col(i) = st.theta_mean + sqrt_cov * z;
  ens.health[i] = MemberHealth{};
}

// Iterative ensemble inversion driver: per iteration, every member is
// simulated forward, diverged members are redrawn from the healthy
// cloud, the tempering increment comes from the data misfit controller,
// and all members take a Kalman-type step toward the data. The
// covariances and misfits are built from the noiseless predictions; the
// measurement-noise covariance enters the gain through the alpha^{-1} R
// term, and fresh per-member noise is added to the predictions inside
// each update residual (stochastic variant, on by default). Terminates
// when the cumulative tempering reaches 1, or at max_iterations with
// the result flagged incomplete. The estimate is the final ensemble
// mean.
inline IdentifyResult run_identification(const ForwardProblem& forward,
                                         const Eigen::VectorXd& y_obs,
                                         const PriorSpec& prior,
                                         const NoiseSpec& noise,
                                         const IdentifyOptions& opts) {
  if (y_obs.size() != 2 * forward.total_samples())
    throw SchemaError("observation vector has length " +
                      std::to_string(y_obs.size()) + ", expected " +
                      std::to_string(2 * forward.total_samples()));
  if (prior.dim() != forward.param_size())
    throw SchemaError("prior dimension " + std::to_string(prior.dim()) +
                      " does not match the model's " +
                      std::to_string(forward.param_size()) + " parameters");
  if (!noise.valid()) throw ConfigError("noise variances must be positive");

  const int m = opts.members;
  const int h = forward.total_samples();
  const Eigen::VectorXd r_diag = stacked_noise_variance(noise, h);

  // In log-space mode the ensemble lives on phi = log(theta); the prior
  // is moment-matched to a lognormal so its physical mean and variance
  // are preserved. Positivity then holds by construction and the floor
  // is dropped.
  PriorSpec work_prior = prior;
  if (opts.log_space) {
    if (!prior.cov.isDiagonal(1e-14))
      throw ConfigError("log-space mode requires a diagonal prior covariance");
    work_prior.floor.resize(0);
    for (int j = 0; j < prior.dim(); ++j) {
      const double mu = prior.mean(j);
      if (!(mu > 0.0))
        throw ConfigError("log-space mode requires positive prior means");
      const double s2 = std::log1p(prior.cov(j, j) / (mu * mu));
      work_prior.mean(j) = std::log(mu) - 0.5 * s2;
      work_prior.cov(j, j) = s2;
    }
  }
  auto to_phys = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return opts.log_space ? v.array().exp().matrix() : v;
  };

  Ensemble ens = draw_prior_ensemble(work_prior, m, opts.seed);
  ens.y.resize(2 * h, m);

  std::vector<std::string> member_errors(m);
  auto simulate_member = [&](int i, int iter) {
    (void)iter;
    try {
      PredictResult pr = forward.predict(to_phys(ens.theta.col(i)));
      if (!pr.y.allFinite())
        throw SimulationError("prediction is not finite", 0);
      ens.y.col(i) = pr.y;
      ens.health[i].failed = false;
      ens.health[i].out_of_range = !pr.in_range;
      member_errors[i].clear();
    } catch (const std::exception& e) {
      ens.health[i].failed = true;
      member_errors[i] = e.what();
    }
  };

  IdentifyResult result;
  TemperState temper;

  for (int iter = 0; iter < opts.max_iterations && !temper.done(); ++iter) {
    ens.iteration = iter;
    detail::parallel_for(m, opts.threads, [&](int i) { simulate_member(i, iter); });

    int quarantined = 0;
    for (int attempt = 0; attempt < opts.quarantine_retries; ++attempt) {
      std::vector<int> failed;
      for (int i = 0; i < m; ++i)
        if (ens.health[i].failed) failed.push_back(i);
      if (failed.empty()) break;
      if (static_cast<int>(failed.size()) * 2 > m) {
        std::string sample;
        for (int i : failed)
          if (!member_errors[i].empty()) {
            sample = member_errors[i];
            break;
          }
        throw SolverError("iteration " + std::to_string(iter) + ": " +
                          std::to_string(failed.size()) + " of " +
                          std::to_string(m) + " members failed (" + sample + ")");
      }
      for (int i : failed) {
        quarantine_member(ens, i,
                          derive_seed(opts.seed, RngStream::quarantine,
                                      static_cast<std::uint64_t>(i),
                                      (static_cast<std::uint64_t>(iter) << 8) |
                                          static_cast<std::uint64_t>(attempt)));
        ++quarantined;
      }
      detail::parallel_for(static_cast<int>(failed.size()), opts.threads,
                           [&](int k) { simulate_member(failed[k], iter); });
    }
    {
      int still_failed = 0;
      for (int i = 0; i < m; ++i)
        if (ens.health[i].failed) ++still_failed;
      if (still_failed * 2 > m)
        throw SolverError("iteration " + std::to_string(iter) + ": " +
                          std::to_string(still_failed) + " of " +
                          std::to_string(m) +
                          " members still failing after quarantine");
    }

    const EnsembleStats stats = ensemble_stats(ens);
    Eigen::VectorXd misfits(stats.healthy);
    {
      int col = 0;
      for (int i = 0; i < m; ++i) {
        if (ens.health[i].failed) continue;
        misfits(col++) = misfit(y_obs, ens.y.col(i), r_diag);
      }
    }

    const auto alpha = dmc_alpha(misfits, h, temper, opts.dmc);
    if (!alpha) break;

    IterationRecord rec;
    rec.iteration = iter;
    rec.alpha = *alpha;
    rec.t_after = temper.t();
    rec.mean_misfit = misfits.mean();
    rec.misfit_variance = misfits.size() > 1
                              ? (misfits.array() - misfits.mean()).square().sum() /
                                    (misfits.size() - 1)
                              : 0.0;
    rec.healthy = stats.healthy;
    rec.quarantined = quarantined;
    rec.param_stats.reserve(ens.theta.rows());
    for (Eigen::Index j = 0; j < ens.theta.rows(); ++j) {
      std::vector<double> vals(m);
      for (int i = 0; i < m; ++i)
        vals[i] = opts.log_space ? std::exp(ens.theta(j, i)) : ens.theta(j, i);
      rec.param_stats.push_back(boxplot_stats(std::move(vals)));
    }
    result.records.push_back(std::move(rec));
    result.alphas.push_back(*alpha);

    if (opts.perturb_predictions) {
      Eigen::MatrixXd y_upd = ens.y;
      for (int i = 0; i < m; ++i) {
        auto rng = make_rng(derive_seed(opts.seed, RngStream::member_noise,
                                        static_cast<std::uint64_t>(i),
                                        static_cast<std::uint64_t>(iter)));
        Eigen::VectorXd col = y_upd.col(i);
        perturb_stacked(col, noise, rng);
        y_upd.col(i) = col;
      }
      enki_update(ens, stats, y_upd, y_obs, r_diag, *alpha, work_prior.floor);
    } else {
      enki_update(ens, stats, y_obs, r_diag, *alpha, work_prior.floor);
    }
  }

  result.complete = temper.done();
  result.iterations = static_cast<int>(result.records.size());

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(ens.theta.rows());
  int healthy = 0;
  for (int i = 0; i < m; ++i) {
    if (ens.health[i].failed) continue;
    mean += to_phys(ens.theta.col(i));
    ++healthy;
  }
  result.theta_hat = mean / healthy;
  result.final_param_stats.reserve(ens.theta.rows());
  for (Eigen::Index j = 0; j < ens.theta.rows(); ++j) {
    std::vector<double> vals(m);
    for (int i = 0; i < m; ++i)
      vals[i] = opts.log_space ? std::exp(ens.theta(j, i)) : ens.theta(j, i);
    result.final_param_stats.push_back(boxplot_stats(std::move(vals)));
  }
  return result;
}

}  // namespace ecmki
