#pragma once

#include <cmath>
#include <stdexcept>

namespace ecmki {

// Two-node lumped thermal network: a core node heated by the cell's
// losses, conduction to a surface node, convection from the surface to
// ambient. Capacities in J/K, resistances in K/W.
struct ThermalParams {
  double c_core = 0.0;
  double c_surf = 0.0;
  double r_core = 0.0;
  double r_surf = 0.0;

  bool valid() const {
    return c_core > 0.0 && c_surf > 0.0 && r_core > 0.0 && r_surf > 0.0;
  }
};

// Arrhenius-type resistance correction around a reference temperature:
// r_ref * exp(kappa * (1/T_core - 1/T_ref)).
inline double arrhenius(double r_ref, double kappa, double t_core_K, double t_ref_K) {
  if (!(t_core_K > 0.0) || !(t_ref_K > 0.0))
    throw std::domain_error("arrhenius: temperatures must be positive kelvin");
  return r_ref * std::exp(kappa * (1.0 / t_core_K - 1.0 / t_ref_K));
}

// Heating power from the overpotential; positive for irreversible losses.
inline double heat_generation(double current_A, double terminal_V, double ocv_V) {
  return current_A * (terminal_V - ocv_V);
}

struct ThermalRates {
  double d_t_core = 0.0;  // K/s
  double d_t_surf = 0.0;  // K/s
};

inline ThermalRates thermal_derivatives(const ThermalParams& p, double t_core_K,
                                        double t_surf_K, double t_amb_K,
                                        double q_gen_W) {
  const double conduction_W = (t_core_K - t_surf_K) / p.r_core;
  return {(q_gen_W - conduction_W) / p.c_core,
          (conduction_W - (t_surf_K - t_amb_K) / p.r_surf) / p.c_surf};
}

}  // namespace ecmki
