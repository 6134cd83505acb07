#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ecmki/cell.hpp"
#include "ecmki/common.hpp"
#include "ecmki/drive_cycle.hpp"
#include "ecmki/ensemble.hpp"
#include "ecmki/identify.hpp"
#include "ecmki/measurement.hpp"
#include "ecmki/model.hpp"
#include "ecmki/ocv.hpp"

namespace ecmki {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

struct SegmentSpec {
  std::string cycle_csv;           // empty when generated
  std::optional<ProfileSpec> profile;
};

struct OutputSpec {
  std::string results_json = "results.json";
  std::vector<std::string> measurement_csvs;  // simulate targets
  std::vector<std::string> cycle_csvs;        // simulate cycle dumps
  bool include_timestamp = false;
};

struct RunConfig {
  ModelId model = ModelId::thevenin;
  int n_rc = 1;
  std::uint64_t seed = 0;
  FixedParams fixed;
  double default_amb_K = 298.15;

  std::vector<SegmentSpec> segments;
  std::vector<std::string> measurement_csvs;  // identify/validate inputs

  NoiseSpec noise;
  NoiseSpec solver_noise;

  Eigen::VectorXd true_params;  // empty when not configured

  bool prior_explicit = false;
  Eigen::VectorXd prior_mean;  // explicit mode
  Eigen::VectorXd prior_sd;
  double prior_mean_offset_rel = 0.3;
  double prior_sd_rel = 0.2;
  double floor_scale = 1e-6;

  IdentifyOptions enki;
  std::string positivity = "floor";
  double dt_internal = 1.0;

  OutputSpec output;

  std::vector<std::string> warnings;
  std::uint64_t config_hash = 0;

  int param_size() const { return param_dim(model, n_rc); }
};

namespace detail {

inline void warn_unknown(const json& obj, std::initializer_list<const char*> known,
                         const std::string& prefix,
                         std::vector<std::string>& warnings) {
  for (const auto& item : obj.items()) {
    bool found = false;
    for (const char* k : known)
      if (item.key() == k) {
        found = true;
        break;
      }
    if (!found) warnings.push_back("unknown key '" + prefix + item.key() + "'");
  }
}

inline double require_number(const json& obj, const char* key,
                             const std::string& prefix) {
  if (!obj.contains(key))
    throw ConfigError("missing key '" + prefix + key + "'");
  if (!obj[key].is_number())
    throw ConfigError("key '" + prefix + key + "' must be a number");
  return obj[key].get<double>();
}

inline double number_or(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw ConfigError(std::string("key '") + key + "' must be a number");
  return obj[key].get<double>();
}

}  // namespace detail

// Named map in the identified-parameter schema; every name must be
// present, unknown names are reported.
inline Eigen::VectorXd parse_named_params(const json& obj, ModelId model, int n_rc,
                                          const std::string& prefix,
                                          std::vector<std::string>& warnings) {
  if (!obj.is_object())
    throw ConfigError("'" + prefix + "' must be an object of parameter values");
  const auto names = param_names(model, n_rc);
  Eigen::VectorXd theta(names.size());
  std::string missing;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!obj.contains(names[j])) {
      missing += (missing.empty() ? "" : ", ") + ("'" + prefix + names[j] + "'");
      continue;
    }
    theta(j) = obj[names[j]].get<double>();
  }
  if (!missing.empty()) throw ConfigError("missing key(s) " + missing);
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const auto& n : names)
      if (item.key() == n) {
        known = true;
        break;
      }
    if (!known) warnings.push_back("unknown key '" + prefix + item.key() + "'");
  }
  return theta;
}

inline ordered_json named_params_json(const Eigen::VectorXd& theta, ModelId model,
                                      int n_rc) {
  const auto names = param_names(model, n_rc);
  ordered_json out;
  for (std::size_t j = 0; j < names.size(); ++j) out[names[j]] = theta(j);
  return out;
}

inline OcvCurve parse_ocv(const json& obj, std::vector<std::string>& warnings) {
  if (!obj.is_object()) throw ConfigError("'fixed.ocv' must be an object");
  const std::string type = obj.value("type", "polynomial");
  if (type == "polynomial") {
    detail::warn_unknown(obj, {"type", "coeffs"}, "fixed.ocv.", warnings);
    if (!obj.contains("coeffs"))
      throw ConfigError("missing key 'fixed.ocv.coeffs'");
    return OcvCurve::polynomial(obj["coeffs"].get<std::vector<double>>());
  }
  if (type == "table") {
    detail::warn_unknown(obj, {"type", "soc", "voltage"}, "fixed.ocv.", warnings);
    if (!obj.contains("soc") || !obj.contains("voltage"))
      throw ConfigError("missing key 'fixed.ocv.soc' or 'fixed.ocv.voltage'");
    return OcvCurve::table(obj["soc"].get<std::vector<double>>(),
                           obj["voltage"].get<std::vector<double>>());
  }
  throw ConfigError("unknown OCV type '" + type + "'");
}

inline ProfileSpec parse_profile(const json& obj, double default_amb_K,
                                 std::vector<std::string>& warnings) {
  detail::warn_unknown(obj,
                       {"duration_s", "dt_s", "amb_temp_K", "amplitude_cap_A",
                        "pulse_amplitude_A", "pulse_period_s", "pulse_duty",
                        "charge_fraction", "random_amplitude_A", "smooth_window",
                        "n_phases", "rest_fraction", "amb_step_K"},
                       "segments[].profile.", warnings);
  ProfileSpec spec;
  spec.duration_s = detail::number_or(obj, "duration_s", spec.duration_s);
  spec.dt_s = detail::number_or(obj, "dt_s", spec.dt_s);
  spec.amb_temp_K = detail::number_or(obj, "amb_temp_K", default_amb_K);
  spec.amplitude_cap_A = detail::number_or(obj, "amplitude_cap_A", spec.amplitude_cap_A);
  spec.pulse_amplitude_A =
      detail::number_or(obj, "pulse_amplitude_A", spec.pulse_amplitude_A);
  spec.pulse_period_s = detail::number_or(obj, "pulse_period_s", spec.pulse_period_s);
  spec.pulse_duty = detail::number_or(obj, "pulse_duty", spec.pulse_duty);
  spec.charge_fraction =
      detail::number_or(obj, "charge_fraction", spec.charge_fraction);
  spec.random_amplitude_A =
      detail::number_or(obj, "random_amplitude_A", spec.random_amplitude_A);
  spec.smooth_window = static_cast<int>(
      detail::number_or(obj, "smooth_window", spec.smooth_window));
  spec.n_phases =
      static_cast<int>(detail::number_or(obj, "n_phases", spec.n_phases));
  spec.rest_fraction =
      detail::number_or(obj, "rest_fraction", spec.rest_fraction);
  spec.amb_step_K = detail::number_or(obj, "amb_step_K", spec.amb_step_K);
  return spec;
}

inline ordered_json profile_json(const ProfileSpec& p) {
  ordered_json o;
  o["duration_s"] = p.duration_s;
  o["dt_s"] = p.dt_s;
  o["amb_temp_K"] = p.amb_temp_K;
  o["amplitude_cap_A"] = p.amplitude_cap_A;
  o["pulse_amplitude_A"] = p.pulse_amplitude_A;
  o["pulse_period_s"] = p.pulse_period_s;
  o["pulse_duty"] = p.pulse_duty;
  o["charge_fraction"] = p.charge_fraction;
  o["random_amplitude_A"] = p.random_amplitude_A;
  o["smooth_window"] = p.smooth_window;
  o["n_phases"] = p.n_phases;
  o["rest_fraction"] = p.rest_fraction;
  o["amb_step_K"] = p.amb_step_K;
  return o;
}

// Hash over the semantically meaningful fields: everything that changes
// the numbers, nothing that only changes where they are written or how
// fast they are computed.
inline std::uint64_t semantic_hash(const RunConfig& cfg) {
  json doc;  // alphabetically ordered keys give a canonical dump
  doc["model"] = to_string(cfg.model);
  doc["n_rc"] = cfg.n_rc;
  doc["seed"] = cfg.seed;
  doc["capacity_Ah"] = cfg.fixed.capacity_Ah;
  doc["t_ref_K"] = cfg.fixed.t_ref_K;
  doc["r_s"] = cfg.fixed.r_s;
  doc["v_min"] = cfg.fixed.v_min;
  doc["v_max"] = cfg.fixed.v_max;
  doc["max_current_A"] = cfg.fixed.max_current_A;
  doc["ocv"] = cfg.fixed.ocv.describe();
  doc["default_amb_K"] = cfg.default_amb_K;
  doc["noise"] = {cfg.noise.var_voltage, cfg.noise.var_temp};
  doc["solver_noise"] = {cfg.solver_noise.var_voltage, cfg.solver_noise.var_temp};
  json segs = json::array();
  for (const auto& seg : cfg.segments) {
    if (seg.profile)
      segs.push_back(json::parse(profile_json(*seg.profile).dump()));
    else
      segs.push_back(seg.cycle_csv);
  }
  doc["segments"] = segs;
  doc["measurements"] = cfg.measurement_csvs;
  if (cfg.true_params.size() > 0)
    doc["true_params"] = std::vector<double>(
        cfg.true_params.data(), cfg.true_params.data() + cfg.true_params.size());
  doc["prior_explicit"] = cfg.prior_explicit;
  if (cfg.prior_explicit) {
    doc["prior_mean"] = std::vector<double>(
        cfg.prior_mean.data(), cfg.prior_mean.data() + cfg.prior_mean.size());
    doc["prior_sd"] = std::vector<double>(
        cfg.prior_sd.data(), cfg.prior_sd.data() + cfg.prior_sd.size());
  } else {
    doc["prior_mean_offset_rel"] = cfg.prior_mean_offset_rel;
    doc["prior_sd_rel"] = cfg.prior_sd_rel;
  }
  doc["floor_scale"] = cfg.floor_scale;
  doc["members"] = cfg.enki.members;
  doc["max_iterations"] = cfg.enki.max_iterations;
  doc["perturb_predictions"] = cfg.enki.perturb_predictions;
  doc["sqrt_variance_dmc"] = cfg.enki.dmc.sqrt_variance;
  doc["double_h_dmc"] = cfg.enki.dmc.double_h;
  doc["positivity"] = cfg.positivity;
  doc["quarantine_retries"] = cfg.enki.quarantine_retries;
  doc["dt_internal"] = cfg.dt_internal;
  return fnv1a(doc.dump());
}

inline RunConfig load_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  RunConfig cfg;
  detail::warn_unknown(doc,
                       {"model", "n_rc", "seed", "fixed", "true_params",
                        "segments", "measurements", "noise", "solver_noise",
                        "prior", "enki", "integrator", "t_amb_K", "output"},
                       "", cfg.warnings);

  if (!doc.contains("model")) throw ConfigError("missing key 'model'");
  cfg.model = model_id_from_string(doc["model"].get<std::string>());
  cfg.n_rc = static_cast<int>(detail::number_or(doc, "n_rc", 1));
  if (cfg.n_rc < 1) throw ConfigError("'n_rc' must be at least 1");
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  cfg.default_amb_K = detail::number_or(doc, "t_amb_K", cfg.default_amb_K);

  if (doc.contains("fixed")) {
    const json& fx = doc["fixed"];
    detail::warn_unknown(fx,
                         {"capacity_Ah", "t_ref_K", "r_s", "v_min", "v_max",
                          "max_current_A", "ocv"},
                         "fixed.", cfg.warnings);
    cfg.fixed.capacity_Ah = detail::number_or(fx, "capacity_Ah", cfg.fixed.capacity_Ah);
    cfg.fixed.t_ref_K = detail::number_or(fx, "t_ref_K", cfg.fixed.t_ref_K);
    cfg.fixed.r_s = detail::number_or(fx, "r_s", cfg.fixed.r_s);
    cfg.fixed.v_min = detail::number_or(fx, "v_min", cfg.fixed.v_min);
    cfg.fixed.v_max = detail::number_or(fx, "v_max", cfg.fixed.v_max);
    cfg.fixed.max_current_A =
        detail::number_or(fx, "max_current_A", cfg.fixed.max_current_A);
    if (fx.contains("ocv")) cfg.fixed.ocv = parse_ocv(fx["ocv"], cfg.warnings);
  }
  cfg.fixed.n_rc = cfg.n_rc;
  cfg.fixed.validate();

  if (doc.contains("true_params"))
    cfg.true_params = parse_named_params(doc["true_params"], cfg.model, cfg.n_rc,
                                         "true_params.", cfg.warnings);

  if (!doc.contains("segments") || !doc["segments"].is_array() ||
      doc["segments"].empty())
    throw ConfigError("missing key 'segments' (need at least one)");
  for (const json& seg : doc["segments"]) {
    detail::warn_unknown(seg, {"cycle_csv", "profile"}, "segments[].",
                         cfg.warnings);
    SegmentSpec spec;
    if (seg.contains("cycle_csv")) {
      spec.cycle_csv = seg["cycle_csv"].get<std::string>();
    } else if (seg.contains("profile")) {
      spec.profile = parse_profile(seg["profile"], cfg.default_amb_K, cfg.warnings);
    } else {
      throw ConfigError("each segment needs 'cycle_csv' or 'profile'");
    }
    cfg.segments.push_back(std::move(spec));
  }

  if (doc.contains("measurements"))
    cfg.measurement_csvs = doc["measurements"].get<std::vector<std::string>>();

  if (doc.contains("noise")) {
    const json& nz = doc["noise"];
    detail::warn_unknown(nz, {"var_voltage", "var_temp"}, "noise.", cfg.warnings);
    cfg.noise.var_voltage = detail::number_or(nz, "var_voltage", cfg.noise.var_voltage);
    cfg.noise.var_temp = detail::number_or(nz, "var_temp", cfg.noise.var_temp);
  }
  if (!cfg.noise.valid())
    throw ConfigError("'noise' variances must be positive");
  cfg.solver_noise = cfg.noise;
  if (doc.contains("solver_noise")) {
    const json& nz = doc["solver_noise"];
    detail::warn_unknown(nz, {"var_voltage", "var_temp"}, "solver_noise.",
                         cfg.warnings);
    cfg.solver_noise.var_voltage =
        detail::number_or(nz, "var_voltage", cfg.solver_noise.var_voltage);
    cfg.solver_noise.var_temp =
        detail::number_or(nz, "var_temp", cfg.solver_noise.var_temp);
    if (!cfg.solver_noise.valid())
      throw ConfigError("'solver_noise' variances must be positive");
  }

  if (doc.contains("prior")) {
    const json& pr = doc["prior"];
    detail::warn_unknown(
        pr, {"mean", "sd", "mean_offset_rel", "sd_rel", "floor_scale"}, "prior.",
        cfg.warnings);
    cfg.floor_scale = detail::number_or(pr, "floor_scale", cfg.floor_scale);
    if (cfg.floor_scale < 0.0) throw ConfigError("'prior.floor_scale' must be >= 0");
    if (pr.contains("mean")) {
      cfg.prior_explicit = true;
      cfg.prior_mean = parse_named_params(pr["mean"], cfg.model, cfg.n_rc,
                                          "prior.mean.", cfg.warnings);
      if (!pr.contains("sd"))
        throw ConfigError("missing key 'prior.sd' (required with 'prior.mean')");
      cfg.prior_sd = parse_named_params(pr["sd"], cfg.model, cfg.n_rc, "prior.sd.",
                                        cfg.warnings);
      const auto names = param_names(cfg.model, cfg.n_rc);
      for (Eigen::Index j = 0; j < cfg.prior_sd.size(); ++j)
        if (cfg.prior_sd(j) < 0.0)
          throw ConfigError("'prior.sd." + names[j] + "' is negative");
    } else {
      cfg.prior_mean_offset_rel =
          detail::number_or(pr, "mean_offset_rel", cfg.prior_mean_offset_rel);
      cfg.prior_sd_rel = detail::number_or(pr, "sd_rel", cfg.prior_sd_rel);
      if (cfg.prior_sd_rel < 0.0) throw ConfigError("'prior.sd_rel' is negative");
    }
  }

  if (doc.contains("enki")) {
    const json& ek = doc["enki"];
    detail::warn_unknown(ek,
                         {"members", "max_iterations", "perturb_predictions",
                          "sqrt_variance_dmc", "double_h_dmc", "positivity",
                          "quarantine_retries", "threads"},
                         "enki.", cfg.warnings);
    cfg.enki.members = static_cast<int>(detail::number_or(ek, "members", 200));
    cfg.enki.max_iterations =
        static_cast<int>(detail::number_or(ek, "max_iterations", 20));
    if (ek.contains("perturb_predictions"))
      cfg.enki.perturb_predictions = ek["perturb_predictions"].get<bool>();
    if (ek.contains("sqrt_variance_dmc"))
      cfg.enki.dmc.sqrt_variance = ek["sqrt_variance_dmc"].get<bool>();
    if (ek.contains("double_h_dmc"))
      cfg.enki.dmc.double_h = ek["double_h_dmc"].get<bool>();
    if (ek.contains("positivity"))
      cfg.positivity = ek["positivity"].get<std::string>();
    cfg.enki.quarantine_retries =
        static_cast<int>(detail::number_or(ek, "quarantine_retries", 3));
    cfg.enki.threads = static_cast<int>(detail::number_or(ek, "threads", 1));
  }
  if (cfg.enki.members < 2) throw ConfigError("'enki.members' must be at least 2");
  if (cfg.enki.max_iterations < 1)
    throw ConfigError("'enki.max_iterations' must be at least 1");
  if (cfg.positivity != "floor" && cfg.positivity != "log" &&
      cfg.positivity != "none")
    throw ConfigError("'enki.positivity' must be 'floor', 'log', or 'none'");
  cfg.enki.log_space = cfg.positivity == "log";
  cfg.enki.seed = cfg.seed;

  if (doc.contains("integrator")) {
    const json& it = doc["integrator"];
    detail::warn_unknown(it, {"dt_internal_s"}, "integrator.", cfg.warnings);
    cfg.dt_internal = detail::number_or(it, "dt_internal_s", cfg.dt_internal);
  }
  if (!(cfg.dt_internal > 0.0))
    throw ConfigError("'integrator.dt_internal_s' must be positive");

  if (doc.contains("output")) {
    const json& out = doc["output"];
    detail::warn_unknown(
        out, {"results_json", "measurement_csvs", "cycle_csvs", "include_timestamp"},
        "output.", cfg.warnings);
    cfg.output.results_json = out.value("results_json", cfg.output.results_json);
    if (out.contains("measurement_csvs"))
      cfg.output.measurement_csvs =
          out["measurement_csvs"].get<std::vector<std::string>>();
    if (out.contains("cycle_csvs"))
      cfg.output.cycle_csvs = out["cycle_csvs"].get<std::vector<std::string>>();
    if (out.contains("include_timestamp"))
      cfg.output.include_timestamp = out["include_timestamp"].get<bool>();
  }

  cfg.config_hash = semantic_hash(cfg);
  return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return load_config(doc);
}

// Gaussian prior per the configured construction: explicit mean/sd, or
// the reference vector offset by a relative Gaussian draw.
inline PriorSpec build_prior(const RunConfig& cfg) {
  PriorSpec prior;
  if (cfg.prior_explicit) {
    prior.mean = cfg.prior_mean;
    prior.cov = cfg.prior_sd.array().square().matrix().asDiagonal();
    prior.floor = default_floor(prior.mean, cfg.floor_scale);
  } else {
    if (cfg.true_params.size() == 0)
      throw ConfigError(
          "relative prior needs 'true_params' as reference; give 'prior.mean' "
          "and 'prior.sd' instead");
    prior = offset_prior(cfg.true_params, cfg.prior_mean_offset_rel,
                         cfg.prior_sd_rel, cfg.seed, cfg.floor_scale);
  }
  if (cfg.positivity == "none") prior.floor.resize(0);
  return prior;
}

}  // namespace ecmki
