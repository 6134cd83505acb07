#pragma once

#include <Eigen/Core>
#include <string>
#include <variant>
#include <vector>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/ndct.hpp"
#include "ecmki/thevenin.hpp"

namespace ecmki {

enum class ModelId { thevenin, ndct };

inline std::string to_string(ModelId id) {
  return id == ModelId::thevenin ? "thevenin" : "ndct";
}

inline ModelId model_id_from_string(const std::string& s) {
  if (s == "thevenin") return ModelId::thevenin;
  if (s == "ndct") return ModelId::ndct;
  throw ConfigError("unknown model '" + s + "', expected 'thevenin' or 'ndct'");
}

using ModelParams = std::variant<TheveninParams, NdctParams>;

inline ModelId model_id(const ModelParams& p) {
  return std::holds_alternative<TheveninParams>(p) ? ModelId::thevenin
                                                   : ModelId::ndct;
}

inline int state_dim(ModelId id, int n_rc = 1) {
  return id == ModelId::thevenin ? thevenin_state_dim(n_rc) : kNdctStateDim;
}

inline int param_dim(ModelId id, int n_rc = 1) {
  return id == ModelId::thevenin ? thevenin_param_dim(n_rc) : kNdctParamDim;
}

inline Eigen::VectorXd initial_state(ModelId id, int n_rc, double t_amb_K) {
  return id == ModelId::thevenin ? thevenin_initial_state(n_rc, t_amb_K)
                                 : ndct_initial_state(t_amb_K);
}

inline std::vector<std::string> param_names(ModelId id, int n_rc = 1) {
  return id == ModelId::thevenin ? thevenin_param_names(n_rc) : ndct_param_names();
}

// Overload shims so the variant visitors below stay uniform.
inline void derivatives_of(const TheveninParams& m, const FixedParams& fx,
                           const Eigen::VectorXd& x, const InputSample& u,
                           Eigen::VectorXd& dxdt) {
  thevenin_derivatives(m, fx, x, u, dxdt);
}
inline void derivatives_of(const NdctParams& m, const FixedParams& fx,
                           const Eigen::VectorXd& x, const InputSample& u,
                           Eigen::VectorXd& dxdt) {
  ndct_derivatives(m, fx, x, u, dxdt);
}
inline OutputSample output_of(const TheveninParams& m, const FixedParams& fx,
                              const Eigen::VectorXd& x, const InputSample& u) {
  return thevenin_output(m, fx, x, u);
}
inline OutputSample output_of(const NdctParams& m, const FixedParams& fx,
                              const Eigen::VectorXd& x, const InputSample& u) {
  return ndct_output(m, fx, x, u);
}
inline bool in_range_of(const TheveninParams& m, const Eigen::VectorXd& x) {
  return thevenin_in_range(m, x);
}
inline bool in_range_of(const NdctParams&, const Eigen::VectorXd& x) {
  return ndct_in_range(x);
}

inline Eigen::VectorXd pack_params(const ModelParams& p) {
  return std::visit([](const auto& m) { return pack_params(m); }, p);
}

inline ModelParams unpack_params(ModelId id, const Eigen::VectorXd& theta,
                                 int n_rc = 1) {
  if (id == ModelId::thevenin) return unpack_thevenin(theta, n_rc);
  return unpack_ndct(theta);
}

inline bool params_valid(const ModelParams& p) {
  return std::visit([](const auto& m) { return m.valid(); }, p);
}

inline void model_derivatives(const ModelParams& p, const FixedParams& fx,
                              const Eigen::VectorXd& x, const InputSample& u,
                              Eigen::VectorXd& dxdt) {
  std::visit([&](const auto& m) { derivatives_of(m, fx, x, u, dxdt); }, p);
}

inline OutputSample model_output(const ModelParams& p, const FixedParams& fx,
                                 const Eigen::VectorXd& x, const InputSample& u) {
  return std::visit([&](const auto& m) { return output_of(m, fx, x, u); }, p);
}

inline bool model_in_range(const ModelParams& p, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& m) { return in_range_of(m, x); }, p);
}

inline int model_state_dim(const ModelParams& p) {
  if (const auto* t = std::get_if<TheveninParams>(&p))
    return thevenin_state_dim(t->n_rc());
  return kNdctStateDim;
}

}  // namespace ecmki
