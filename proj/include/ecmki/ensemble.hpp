#pragma once

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <random>
#include <string>
#include <vector>

#include "ecmki/common.hpp"
#include "ecmki/rng.hpp"

namespace ecmki {

// Gaussian prior over the parameter vector. The floor vector, when
// nonempty, lifts entries below it both at the initial draw and after
// every update, keeping capacitances and resistances physical.
struct PriorSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::VectorXd floor;

  int dim() const { return static_cast<int>(mean.size()); }

  void validate() const {
    if (mean.size() == 0) throw ConfigError("prior mean is empty");
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
      throw ConfigError("prior covariance is " + std::to_string(cov.rows()) + "x" +
                        std::to_string(cov.cols()) + ", expected " +
                        std::to_string(mean.size()) + " square");
    if (!cov.isApprox(cov.transpose(), 1e-12))
      throw ConfigError("prior covariance is not symmetric");
    if (floor.size() != 0 && floor.size() != mean.size())
      throw ConfigError("positivity floor length does not match the prior mean");
  }
};

inline Eigen::VectorXd default_floor(const Eigen::VectorXd& mean,
                                     double scale = 1e-6) {
  return scale * mean.cwiseAbs();
}

// Prior used in the synthetic studies: the mean is the reference vector
// offset by a relative Gaussian perturbation, the covariance is diagonal
// with relative standard deviations.
inline PriorSpec offset_prior(const Eigen::VectorXd& theta_ref,
                              double mean_offset_rel, double sd_rel,
                              std::uint64_t seed, double floor_scale = 1e-6) {
  auto rng = make_rng(derive_seed(seed, RngStream::prior_mean));
  std::normal_distribution<double> unit(0.0, 1.0);
  PriorSpec prior;
  prior.mean = theta_ref;
  if (mean_offset_rel != 0.0)
    for (Eigen::Index j = 0; j < theta_ref.size(); ++j)
      prior.mean(j) += mean_offset_rel * theta_ref(j) * unit(rng);
  const Eigen::VectorXd sd = sd_rel * theta_ref.cwiseAbs();
  prior.cov = sd.array().square().matrix().asDiagonal();
  prior.floor = default_floor(prior.mean, floor_scale);
  return prior;
}

inline void apply_floor(Eigen::VectorXd& theta, const Eigen::VectorXd& floor) {
  for (Eigen::Index j = 0; j < floor.size(); ++j)
    if (theta(j) < floor(j)) theta(j) = floor(j);
}

// Symmetric PSD square root with clipping of round-off negatives.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw SolverError("eigendecomposition failed on a covariance matrix");
  Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index j = 0; j < ev.size(); ++j) {
    if (ev(j) < -1e-10 * scale)
      throw SolverError("covariance matrix is not positive semidefinite");
    ev(j) = ev(j) > 0.0 ? std::sqrt(ev(j)) : 0.0;
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

struct MemberHealth {
  bool failed = false;
  bool out_of_range = false;
};

// Parameter members in columns, paired predicted stacked outputs filled
// once per iteration.
struct Ensemble {
  Eigen::MatrixXd theta;  // n x M
  Eigen::MatrixXd y;      // 2H x M
  std::vector<MemberHealth> health;
  int iteration = 0;

  int members() const { return static_cast<int>(theta.cols()); }

  int healthy_count() const {
    int m = 0;
    for (const auto& hlt : health)
      if (!hlt.failed) ++m;
    return m;
  }
};

inline Ensemble draw_prior_ensemble(const PriorSpec& prior, int members,
                                    std::uint64_t seed) {
  if (members < 2) throw ConfigError("ensemble needs at least 2 members");
  prior.validate();
  const Eigen::MatrixXd sqrt_cov = psd_sqrt(prior.cov);
  const int n = prior.dim();
  Ensemble ens;
  ens.theta.resize(n, members);
  ens.health.assign(members, MemberHealth{});
  Eigen::VectorXd z(n);
  for (int i = 0; i < members; ++i) {
    auto rng = make_rng(derive_seed(seed, RngStream::prior_draw,
                                    static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int j = 0; j < n; ++j) z(j) = unit(rng);
    Eigen::VectorXd member = prior.mean + sqrt_cov * z;
    apply_floor(member, prior.floor);
    ens.theta.col(i) = member;
  }
  return ens;
}

// Empirical moments over healthy members, kept in anomaly form. The
// covariance accessors materialize the small products for tests and the
// single-shot update; the iterative solver works on the anomalies.
struct EnsembleStats {
  Eigen::VectorXd theta_mean;
  Eigen::VectorXd y_mean;
  Eigen::MatrixXd a_theta;  // n x m, deviations from the mean
  Eigen::MatrixXd a_y;      // 2H x m
  int healthy = 0;

  double norm() const { return 1.0 / (healthy - 1); }

  Eigen::MatrixXd cov_theta() const { return norm() * a_theta * a_theta.transpose(); }
  Eigen::MatrixXd cov_theta_y() const { return norm() * a_theta * a_y.transpose(); }
  Eigen::MatrixXd cov_yy() const { return norm() * a_y * a_y.transpose(); }
};

inline EnsembleStats ensemble_stats(const Ensemble& ens) {
  const int m = ens.healthy_count();
  if (m < 2)
    throw SolverError("ensemble collapsed: " + std::to_string(m) +
                      " healthy members remain");
  EnsembleStats st;
  st.healthy = m;
  st.a_theta.resize(ens.theta.rows(), m);
  st.a_y.resize(ens.y.rows(), m);
  int col = 0;
  for (int i = 0; i < ens.members(); ++i) {
    if (ens.health[i].failed) continue;
    st.a_theta.col(col) = ens.theta.col(i);
    st.a_y.col(col) = ens.y.col(i);
    ++col;
  }
  st.theta_mean = st.a_theta.rowwise().mean();
  st.y_mean = st.a_y.rowwise().mean();
  st.a_theta.colwise() -= st.theta_mean;
  st.a_y.colwise() -= st.y_mean;
  return st;
}

}  // namespace ecmki
