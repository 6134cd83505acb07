#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <string>

#include "ecmki/common.hpp"
#include "ecmki/ensemble.hpp"

namespace ecmki {

inline void require_positive_r(const Eigen::VectorXd& r_diag) {
  for (Eigen::Index j = 0; j < r_diag.size(); ++j)
    if (!(r_diag(j) > 0.0))
      throw SolverError("noise covariance diagonal entry " + std::to_string(j) +
                        " is not positive");
}

// Phi = 1/2 (y_obs - y)^T R^{-1} (y_obs - y) with diagonal R.
inline double misfit(const Eigen::VectorXd& y_obs, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& r_diag) {
  if (y_obs.size() != y.size() || y_obs.size() != r_diag.size())
    throw SchemaError("misfit operands disagree in length");
  require_positive_r(r_diag);
  return 0.5 * ((y_obs - y).array().square() / r_diag.array()).sum();
}

// Cholesky with a growing diagonal jitter on failure.
inline Eigen::LLT<Eigen::MatrixXd> jittered_llt(const Eigen::MatrixXd& s,
                                                const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    const double trace_scale = s.trace() / s.rows();
    for (double jitter : {1e-12, 1e-9, 1e-6}) {
      Eigen::MatrixXd jittered = s;
      jittered.diagonal().array() += jitter * trace_scale;
      llt.compute(jittered);
      if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success) throw SolverError(what);
  }
  return llt;
}

// Solves (C_yy + alpha^{-1} R) X = B with C_yy = A_y A_y^T / (m - 1).
// When the output dimension dwarfs the ensemble (2H outputs, a few
// hundred members) the 2H x 2H system is never materialized: C_yy has
// rank at most m, so the inverse goes through the m x m capacitance
// matrix (matrix inversion lemma). With few outputs the dense side is
// the cheap one. Both branches solve the same equations.
inline Eigen::MatrixXd woodbury_solve(const Eigen::MatrixXd& a_y, int healthy,
                                      const Eigen::VectorXd& r_diag, double alpha,
                                      const Eigen::MatrixXd& b) {
  if (a_y.rows() != r_diag.size() || a_y.rows() != b.rows())
    throw SchemaError("woodbury operands disagree in output dimension");
  if (healthy < 2) throw SolverError("woodbury solve needs at least 2 members");
  if (!(alpha > 0.0)) throw SolverError("tempering increment must be positive");
  require_positive_r(r_diag);

  const Eigen::VectorXd d = r_diag / alpha;             // diagonal of alpha^{-1} R
  const double norm = 1.0 / static_cast<double>(healthy - 1);

  if (a_y.rows() <= a_y.cols()) {
    Eigen::MatrixXd s = norm * (a_y * a_y.transpose());
    s.diagonal() += d;
    return jittered_llt(s, "tempered innovation covariance is not positive definite")
        .solve(b);
  }

  const Eigen::VectorXd dinv = d.cwiseInverse();
  const Eigen::MatrixXd u = std::sqrt(norm) * a_y;      // C_yy = u u^T
  const Eigen::MatrixXd dinv_b = dinv.asDiagonal() * b;
  const Eigen::MatrixXd dinv_u = dinv.asDiagonal() * u;
  Eigen::MatrixXd cap = u.transpose() * dinv_u;
  cap.diagonal().array() += 1.0;

  const Eigen::MatrixXd rhs = u.transpose() * dinv_b;
  const auto llt =
      jittered_llt(cap, "ensemble capacitance matrix is not positive definite");
  const Eigen::MatrixXd z = llt.solve(rhs);
  return dinv_b - dinv_u * z;
}

// One tempered Kalman-type update of every member,
// theta_i += C_ty (C_yy + alpha^{-1} R)^{-1} (y_obs - y_i),
// carried out in the ensemble subspace. y_pred holds the per-member
// predictions used in the residual; in the stochastic variant they carry
// fresh measurement noise while the covariances in stats stay noiseless.
// The positivity floor is applied after the move when provided.
inline void enki_update(Ensemble& ens, const EnsembleStats& stats,
                        const Eigen::MatrixXd& y_pred,
                        const Eigen::VectorXd& y_obs, const Eigen::VectorXd& r_diag,
                        double alpha, const Eigen::VectorXd& floor = {}) {
  if (y_obs.size() != y_pred.rows() || ens.members() != y_pred.cols())
    throw SchemaError("observation length does not match predicted outputs");
  Eigen::MatrixXd residuals = (-y_pred).colwise() + y_obs;
  const Eigen::MatrixXd w =
      woodbury_solve(stats.a_y, stats.healthy, r_diag, alpha, residuals);
  const Eigen::MatrixXd cty =
      stats.norm() * (stats.a_theta * stats.a_y.transpose());
  ens.theta += cty * w;
  if (floor.size() > 0) {
    Eigen::VectorXd col;
    for (int i = 0; i < ens.members(); ++i) {
      col = ens.theta.col(i);
      apply_floor(col, floor);
      ens.theta.col(i) = col;
    }
  }
}

inline void enki_update(Ensemble& ens, const EnsembleStats& stats,
                        const Eigen::VectorXd& y_obs, const Eigen::VectorXd& r_diag,
                        double alpha, const Eigen::VectorXd& floor = {}) {
  enki_update(ens, stats, ens.y, y_obs, r_diag, alpha, floor);
}

struct GaussianUpdate {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// One global Gaussian conditioning step from explicit covariances:
// m = theta_mean + C_ty (C_yy + R)^{-1} (y_obs - y_mean),
// P = C_tt - C_ty (C_yy + R)^{-1} C_ty^T.
inline GaussianUpdate single_shot_update(const Eigen::VectorXd& theta_mean,
                                         const Eigen::VectorXd& y_mean,
                                         const Eigen::MatrixXd& cov_tt,
                                         const Eigen::MatrixXd& cov_ty,
                                         const Eigen::MatrixXd& cov_yy,
                                         const Eigen::VectorXd& y_obs,
                                         const Eigen::VectorXd& r_diag) {
  require_positive_r(r_diag);
  Eigen::MatrixXd s = cov_yy;
  s.diagonal() += r_diag;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success)
    throw SolverError("innovation covariance is not positive definite");
  GaussianUpdate out;
  out.mean = theta_mean + cov_ty * llt.solve(y_obs - y_mean);
  out.cov = cov_tt - cov_ty * llt.solve(cov_ty.transpose());
  return out;
}

// Same step from ensemble statistics: the solves stay on whichever side
// woodbury_solve picks and the cross covariance is formed once.
inline GaussianUpdate single_shot_update(const EnsembleStats& stats,
                                         const Eigen::VectorXd& y_obs,
                                         const Eigen::VectorXd& r_diag) {
  const Eigen::MatrixXd cty =
      stats.norm() * (stats.a_theta * stats.a_y.transpose());
  const Eigen::VectorXd w_mean = woodbury_solve(
      stats.a_y, stats.healthy, r_diag, 1.0, y_obs - stats.y_mean);
  GaussianUpdate out;
  out.mean = stats.theta_mean + cty * w_mean;
  out.cov = stats.cov_theta() -
            cty * woodbury_solve(stats.a_y, stats.healthy, r_diag, 1.0,
                                 cty.transpose());
  return out;
}

}  // namespace ecmki
