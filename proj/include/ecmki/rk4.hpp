#pragma once

#include <Eigen/Core>

#include "ecmki/common.hpp"

namespace ecmki {

struct Rk4Workspace {
  Eigen::VectorXd k1, k2, k3, k4, tmp;

  void resize(Eigen::Index n) {
    k1.resize(n);
    k2.resize(n);
    k3.resize(n);
    k4.resize(n);
    tmp.resize(n);
  }
};

// Classical RK4 step with zero-order hold on the input. Advances x in
// place; deriv has signature (x, u, dxdt).
template <typename Deriv>
void rk4_step(Deriv&& deriv, Eigen::VectorXd& x, const InputSample& u, double dt,
              Rk4Workspace& ws) {
  deriv(x, u, ws.k1);
  ws.tmp = x + 0.5 * dt * ws.k1;
  deriv(ws.tmp, u, ws.k2);
  ws.tmp = x + 0.5 * dt * ws.k2;
  deriv(ws.tmp, u, ws.k3);
  ws.tmp = x + dt * ws.k3;
  deriv(ws.tmp, u, ws.k4);
  x += (dt / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

template <typename Deriv>
Eigen::VectorXd rk4_step(Deriv&& deriv, const Eigen::VectorXd& x,
                         const InputSample& u, double dt) {
  Rk4Workspace ws;
  ws.resize(x.size());
  Eigen::VectorXd out = x;
  rk4_step(deriv, out, u, dt, ws);
  return out;
}

}  // namespace ecmki
