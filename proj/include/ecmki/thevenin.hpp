#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/thermal.hpp"

namespace ecmki {

struct RcPair {
  double r = 0.0;  // Ohm
  double c = 0.0;  // F
};

// Thevenin equivalent circuit with n polarization RC pairs, coupled to
// the two-node thermal network. The ohmic resistance follows an
// Arrhenius law with activation parameter kappa1, the RC-pair
// resistances with kappa2.
struct TheveninParams {
  double r_o = 0.0;
  std::vector<RcPair> rc;
  ThermalParams thermal;
  double kappa1 = 0.0;  // K
  double kappa2 = 0.0;  // K

  int n_rc() const { return static_cast<int>(rc.size()); }

  bool valid() const {
    if (!(r_o > 0.0) || rc.empty() || !thermal.valid()) return false;
    for (const auto& p : rc)
      if (!(p.r > 0.0) || !(p.c > 0.0)) return false;
    return true;
  }
};

// State layout: [v_p1 .. v_pn, soc, t_core, t_surf].
inline int thevenin_state_dim(int n_rc) { return n_rc + 3; }

inline Eigen::VectorXd thevenin_initial_state(int n_rc, double t_amb_K,
                                              double soc0 = 1.0) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(thevenin_state_dim(n_rc));
  x(n_rc) = soc0;
  x(n_rc + 1) = t_amb_K;
  x(n_rc + 2) = t_amb_K;
  return x;
}

inline OutputSample thevenin_output(const TheveninParams& p, const FixedParams& fx,
                                    const Eigen::VectorXd& x, const InputSample& u) {
  const int n = p.n_rc();
  const double t_core = x(n + 1);
  const double r_o_t = arrhenius(p.r_o, p.kappa1, t_core, fx.t_ref_K);
  double v = fx.ocv(x(n)) + r_o_t * u.current_A;
  for (int i = 0; i < n; ++i) v -= x(i);
  return {v, x(n + 2)};
}

inline void thevenin_derivatives(const TheveninParams& p, const FixedParams& fx,
                                 const Eigen::VectorXd& x, const InputSample& u,
                                 Eigen::VectorXd& dxdt) {
  const int n = p.n_rc();
  const double soc = x(n);
  const double t_core = x(n + 1);
  const double t_surf = x(n + 2);

  const double r_o_t = arrhenius(p.r_o, p.kappa1, t_core, fx.t_ref_K);
  double polarization = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r_i_t = arrhenius(p.rc[i].r, p.kappa2, t_core, fx.t_ref_K);
    dxdt(i) = -x(i) / (r_i_t * p.rc[i].c) - u.current_A / p.rc[i].c;
    polarization += x(i);
  }

  // Coulomb counting with unit efficiency; capacity in ampere-hours.
  dxdt(n) = u.current_A / (3600.0 * fx.capacity_Ah);

  const double ocv = fx.ocv(soc);
  const double v_term = ocv - polarization + r_o_t * u.current_A;
  const double q_gen = heat_generation(u.current_A, v_term, ocv);
  const ThermalRates tr =
      thermal_derivatives(p.thermal, t_core, t_surf, u.amb_temp_K, q_gen);
  dxdt(n + 1) = tr.d_t_core;
  dxdt(n + 2) = tr.d_t_surf;
}

inline bool thevenin_in_range(const TheveninParams& p, const Eigen::VectorXd& x) {
  const double soc = x(p.n_rc());
  constexpr double kSlack = 1e-12;
  return soc >= -kSlack && soc <= 1.0 + kSlack;
}

// Identified-parameter ordering:
// [r_o, r_1, c_1, ..., r_n, c_n, c_core, c_surf, r_core, r_surf, kappa1, kappa2].
inline int thevenin_param_dim(int n_rc) { return 7 + 2 * n_rc; }

inline Eigen::VectorXd pack_params(const TheveninParams& p) {
  const int n = p.n_rc();
  Eigen::VectorXd theta(thevenin_param_dim(n));
  theta(0) = p.r_o;
  for (int i = 0; i < n; ++i) {
    theta(1 + 2 * i) = p.rc[i].r;
    theta(2 + 2 * i) = p.rc[i].c;
  }
  theta(1 + 2 * n) = p.thermal.c_core;
  theta(2 + 2 * n) = p.thermal.c_surf;
  theta(3 + 2 * n) = p.thermal.r_core;
  theta(4 + 2 * n) = p.thermal.r_surf;
  theta(5 + 2 * n) = p.kappa1;
  theta(6 + 2 * n) = p.kappa2;
  return theta;
}

inline TheveninParams unpack_thevenin(const Eigen::VectorXd& theta, int n_rc) {
  if (theta.size() != thevenin_param_dim(n_rc))
    throw SchemaError("thevenin parameter vector has length " +
                      std::to_string(theta.size()) + ", expected " +
                      std::to_string(thevenin_param_dim(n_rc)));
  TheveninParams p;
  p.r_o = theta(0);
  p.rc.resize(n_rc);
  for (int i = 0; i < n_rc; ++i) {
    p.rc[i].r = theta(1 + 2 * i);
    p.rc[i].c = theta(2 + 2 * i);
  }
  p.thermal.c_core = theta(1 + 2 * n_rc);
  p.thermal.c_surf = theta(2 + 2 * n_rc);
  p.thermal.r_core = theta(3 + 2 * n_rc);
  p.thermal.r_surf = theta(4 + 2 * n_rc);
  p.kappa1 = theta(5 + 2 * n_rc);
  p.kappa2 = theta(6 + 2 * n_rc);
  return p;
}

inline std::vector<std::string> thevenin_param_names(int n_rc) {
  std::vector<std::string> names{"R_o"};
  for (int i = 1; i <= n_rc; ++i) {
    names.push_back("R_" + std::to_string(i));
    names.push_back("C_" + std::to_string(i));
  }
  for (const char* s : {"C_core", "C_surf", "R_core", "R_surf", "kappa_1", "kappa_2"})
    names.emplace_back(s);
  return names;
}

}  // namespace ecmki
