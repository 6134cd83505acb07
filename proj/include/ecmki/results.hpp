#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecmki/boxplot.hpp"
#include "ecmki/common.hpp"
#include "ecmki/config.hpp"
#include "ecmki/forward.hpp"
#include "ecmki/identify.hpp"
#include "ecmki/model.hpp"

namespace ecmki {

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct ResultBundle {
  ModelId model = ModelId::thevenin;
  int n_rc = 1;
  Eigen::VectorXd theta_hat;
  std::vector<IterationRecord> records;
  std::vector<BoxplotStats> final_param_stats;
  std::vector<double> alphas;
  Eigen::VectorXd reference;  // empty when no truth is supplied
  FitMetrics fit;
  bool has_fit = false;
  bool complete = true;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string timestamp;  // empty unless explicitly enabled
};

namespace detail {

inline ordered_json boxplot_json(const BoxplotStats& st) {
  ordered_json o;
  o["q1"] = st.q1;
  o["median"] = st.median;
  o["q3"] = st.q3;
  o["whisker_low"] = st.whisker_low;
  o["whisker_high"] = st.whisker_high;
  o["outliers"] = st.outliers;
  return o;
}

inline BoxplotStats boxplot_from_json(const json& o) {
  BoxplotStats st;
  st.q1 = o.at("q1").get<double>();
  st.median = o.at("median").get<double>();
  st.q3 = o.at("q3").get<double>();
  st.whisker_low = o.at("whisker_low").get<double>();
  st.whisker_high = o.at("whisker_high").get<double>();
  st.outliers = o.at("outliers").get<std::vector<double>>();
  return st;
}

inline ordered_json param_boxplots_json(const std::vector<BoxplotStats>& stats,
                                        const std::vector<std::string>& names) {
  ordered_json o;
  for (std::size_t j = 0; j < stats.size(); ++j)
    o[names[j]] = boxplot_json(stats[j]);
  return o;
}

}  // namespace detail

inline ordered_json results_json(const ResultBundle& r) {
  const auto names = param_names(r.model, r.n_rc);
  ordered_json doc;
  doc["model"] = to_string(r.model);
  doc["n_rc"] = r.n_rc;
  doc["config_hash"] = hash_hex(r.config_hash);
  doc["seed"] = r.seed;
  doc["complete"] = r.complete;
  doc["iterations"] = r.records.size();
  doc["theta_hat"] = named_params_json(r.theta_hat, r.model, r.n_rc);
  if (r.reference.size() > 0) {
    doc["reference"] = named_params_json(r.reference, r.model, r.n_rc);
    ordered_json err;
    for (std::size_t j = 0; j < names.size(); ++j)
      err[names[j]] =
          100.0 * std::abs(r.theta_hat(j) - r.reference(j)) / std::abs(r.reference(j));
    doc["relative_error_pct"] = err;
  }
  if (r.has_fit) {
    doc["fit"] = {{"rmse_voltage_V", r.fit.rmse_voltage_V},
                  {"rmse_temp_K", r.fit.rmse_temp_K}};
  }
  doc["tempering"] = r.alphas;
  ordered_json recs = ordered_json::array();
  for (const auto& rec : r.records) {
    ordered_json o;
    o["iteration"] = rec.iteration;
    o["alpha"] = rec.alpha;
    o["t_after"] = rec.t_after;
    o["mean_misfit"] = rec.mean_misfit;
    o["misfit_variance"] = rec.misfit_variance;
    o["healthy"] = rec.healthy;
    o["quarantined"] = rec.quarantined;
    o["params"] = detail::param_boxplots_json(rec.param_stats, names);
    recs.push_back(std::move(o));
  }
  doc["records"] = recs;
  if (!r.final_param_stats.empty())
    doc["final_ensemble"] = detail::param_boxplots_json(r.final_param_stats, names);
  if (!r.timestamp.empty()) doc["timestamp"] = r.timestamp;
  return doc;
}

inline void write_results(const ResultBundle& r, std::ostream& out) {
  out << results_json(r).dump(2) << '\n';
}

inline ResultBundle read_results(const json& doc) {
  ResultBundle r;
  r.model = model_id_from_string(doc.at("model").get<std::string>());
  r.n_rc = doc.value("n_rc", 1);
  const auto names = param_names(r.model, r.n_rc);
  const std::string hex = doc.at("config_hash").get<std::string>();
  r.config_hash = std::stoull(hex, nullptr, 16);
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.complete = doc.at("complete").get<bool>();

  auto named_vec = [&](const json& obj) {
    Eigen::VectorXd v(names.size());
    for (std::size_t j = 0; j < names.size(); ++j)
      v(j) = obj.at(names[j]).get<double>();
    return v;
  };
  r.theta_hat = named_vec(doc.at("theta_hat"));
  if (doc.contains("reference")) r.reference = named_vec(doc.at("reference"));
  if (doc.contains("fit")) {
    r.has_fit = true;
    r.fit.rmse_voltage_V = doc["fit"].at("rmse_voltage_V").get<double>();
    r.fit.rmse_temp_K = doc["fit"].at("rmse_temp_K").get<double>();
  }
  r.alphas = doc.at("tempering").get<std::vector<double>>();
  for (const json& o : doc.at("records")) {
    IterationRecord rec;
    rec.iteration = o.at("iteration").get<int>();
    rec.alpha = o.at("alpha").get<double>();
    rec.t_after = o.at("t_after").get<double>();
    rec.mean_misfit = o.at("mean_misfit").get<double>();
    rec.misfit_variance = o.at("misfit_variance").get<double>();
    rec.healthy = o.at("healthy").get<int>();
    rec.quarantined = o.at("quarantined").get<int>();
    for (const auto& n : names)
      rec.param_stats.push_back(detail::boxplot_from_json(o.at("params").at(n)));
    r.records.push_back(std::move(rec));
  }
  if (doc.contains("final_ensemble"))
    for (const auto& n : names)
      r.final_param_stats.push_back(
          detail::boxplot_from_json(doc["final_ensemble"].at(n)));
  if (doc.contains("timestamp")) r.timestamp = doc["timestamp"].get<std::string>();
  return r;
}

inline ResultBundle read_results(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("results document: ") + e.what());
  }
  try {
    return read_results(doc);
  } catch (const json::exception& e) {
    throw ParseError(std::string("results document: ") + e.what());
  }
}

}  // namespace ecmki
