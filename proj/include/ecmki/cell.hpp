#pragma once

#include <stdexcept>

#include "ecmki/ocv.hpp"

namespace ecmki {

// Cell quantities held fixed during identification: rated capacity, the
// Arrhenius reference temperature, the OCV curve, the diffusion-branch
// series resistance (double-capacitor model only), the Thevenin RC-pair
// count, and the operating envelope used for validation.
struct FixedParams {
  OcvCurve ocv = OcvCurve::polynomial({3.0, 1.2});
  double capacity_Ah = 3.3;
  double t_ref_K = 298.15;
  double r_s = 0.0;
  int n_rc = 1;
  double v_min = 2.5;
  double v_max = 4.2;
  double max_current_A = 4.0;

  void validate() const {
    if (!(capacity_Ah > 0.0)) throw std::invalid_argument("capacity_Ah must be positive");
    if (!(t_ref_K > 0.0)) throw std::invalid_argument("t_ref_K must be positive");
    if (r_s < 0.0) throw std::invalid_argument("r_s must be non-negative");
    if (n_rc < 1) throw std::invalid_argument("n_rc must be at least 1");
    if (!(max_current_A > 0.0)) throw std::invalid_argument("max_current_A must be positive");
    if (!(v_min < v_max)) throw std::invalid_argument("voltage window is empty");
    ocv.require_window(v_min, v_max);
  }
};

}  // namespace ecmki
