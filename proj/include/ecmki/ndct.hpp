#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/thermal.hpp"

namespace ecmki {

// Nonlinear double-capacitor circuit coupled to the two-node thermal
// network. A bulk/surface capacitor pair (C_b, C_s) linked through R_b
// mimics diffusion; one RC pair plus the ohmic resistance shape the
// terminal response. R_b and R_o are temperature dependent (kappa2 and
// kappa1 respectively); R_1 is not.
struct NdctParams {
  double c_b = 0.0;
  double c_s = 0.0;
  double r_b = 0.0;
  double r_o = 0.0;
  double r_1 = 0.0;
  double c_1 = 0.0;
  ThermalParams thermal;
  double kappa1 = 0.0;  // K
  double kappa2 = 0.0;  // K

  bool valid() const {
    return c_b > 0.0 && c_s > 0.0 && r_b > 0.0 && r_o > 0.0 && r_1 > 0.0 &&
           c_1 > 0.0 && thermal.valid();
  }
};

// State layout: [v_b, v_s, v_1, t_core, t_surf].
inline constexpr int kNdctStateDim = 5;
inline constexpr int kNdctParamDim = 12;

inline Eigen::VectorXd ndct_initial_state(double t_amb_K, double charge0 = 1.0) {
  Eigen::VectorXd x(kNdctStateDim);
  x << charge0, charge0, 0.0, t_amb_K, t_amb_K;
  return x;
}

inline OutputSample ndct_output(const NdctParams& p, const FixedParams& fx,
                                const Eigen::VectorXd& x, const InputSample& u) {
  const double r_o_t = arrhenius(p.r_o, p.kappa1, x(3), fx.t_ref_K);
  return {fx.ocv(x(1)) - x(2) + r_o_t * u.current_A, x(4)};
}

inline void ndct_derivatives(const NdctParams& p, const FixedParams& fx,
                             const Eigen::VectorXd& x, const InputSample& u,
                             Eigen::VectorXd& dxdt) {
  const double v_b = x(0);
  const double v_s = x(1);
  const double v_1 = x(2);
  const double t_core = x(3);
  const double t_surf = x(4);

  const double r_b_t = arrhenius(p.r_b, p.kappa2, t_core, fx.t_ref_K);
  const double r_o_t = arrhenius(p.r_o, p.kappa1, t_core, fx.t_ref_K);

  dxdt(0) = (v_s - v_b) / (p.c_b * r_b_t) + fx.r_s * u.current_A / (p.c_b * r_b_t);
  dxdt(1) = (v_b - v_s) / (p.c_s * r_b_t) + u.current_A / p.c_s;
  dxdt(2) = -v_1 / (p.r_1 * p.c_1) - u.current_A / p.c_1;

  const double ocv = fx.ocv(v_s);
  const double v_term = ocv - v_1 + r_o_t * u.current_A;
  const double q_gen = heat_generation(u.current_A, v_term, ocv);
  const ThermalRates tr =
      thermal_derivatives(p.thermal, t_core, t_surf, u.amb_temp_K, q_gen);
  dxdt(3) = tr.d_t_core;
  dxdt(4) = tr.d_t_surf;
}

inline bool ndct_in_range(const Eigen::VectorXd& x) {
  constexpr double kSlack = 1e-12;
  return x(0) >= -kSlack && x(0) <= 1.0 + kSlack && x(1) >= -kSlack &&
         x(1) <= 1.0 + kSlack;
}

// Identified-parameter ordering:
// [c_b, c_s, r_b, r_o, c_core, c_surf, r_core, r_surf, kappa1, kappa2, r_1, c_1].
inline Eigen::VectorXd pack_params(const NdctParams& p) {
  Eigen::VectorXd theta(kNdctParamDim);
  theta << p.c_b, p.c_s, p.r_b, p.r_o, p.thermal.c_core, p.thermal.c_surf,
      p.thermal.r_core, p.thermal.r_surf, p.kappa1, p.kappa2, p.r_1, p.c_1;
  return theta;
}

inline NdctParams unpack_ndct(const Eigen::VectorXd& theta) {
  if (theta.size() != kNdctParamDim)
    throw SchemaError("ndct parameter vector has length " +
                      std::to_string(theta.size()) + ", expected " +
                      std::to_string(kNdctParamDim));
  NdctParams p;
  p.c_b = theta(0);
  p.c_s = theta(1);
  p.r_b = theta(2);
  p.r_o = theta(3);
  p.thermal.c_core = theta(4);
  p.thermal.c_surf = theta(5);
  p.thermal.r_core = theta(6);
  p.thermal.r_surf = theta(7);
  p.kappa1 = theta(8);
  p.kappa2 = theta(9);
  p.r_1 = theta(10);
  p.c_1 = theta(11);
  return p;
}

inline std::vector<std::string> ndct_param_names() {
  return {"C_b",    "C_s",    "R_b",     "R_o",     "C_core", "C_surf",
          "R_core", "R_surf", "kappa_1", "kappa_2", "R_1",    "C_1"};
}

}  // namespace ecmki
