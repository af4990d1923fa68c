#pragma once

// Population scaling of per-decision VoI and the CSV/JSON output schemas.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/voi.hpp"

namespace evsi {

struct PopulationContext {
  double decisions_per_year = 1.0;
  double horizon_years = 1.0;
};

inline void validate(const PopulationContext& c) {
  if (!(c.decisions_per_year >= 1.0) || !std::isfinite(c.decisions_per_year)) {
    throw DomainError("decisions per year must be at least 1");
  }
  if (!(c.horizon_years > 0.0) || !std::isfinite(c.horizon_years)) throw DomainError("horizon must be positive");
}

struct ScaledVoi {
  double nb_units_total = 0.0;
  double true_positive_units = 0.0;
  double false_positive_units = 0.0;
};

// Net benefit is in net-true-positive units; one true positive trades against
// (1-z)/z false positives.
inline ScaledVoi scale(double voi_per_decision, const PopulationContext& ctx, Threshold z) {
  validate(ctx);
  if (!(voi_per_decision >= 0.0)) throw DomainError("VoI must be nonnegative");
  ScaledVoi s;
  s.true_positive_units = voi_per_decision * ctx.decisions_per_year * ctx.horizon_years;
  s.false_positive_units = s.true_positive_units * ((1.0 - z.value()) / z.value());
  s.nb_units_total = s.true_positive_units;
  return s;
}

struct VoiRow {
  VoiEstimate estimate;
  ScaledVoi scaled_evsi;
};

enum class Format { csv, json };

inline constexpr const char* kVoiColumns =
    "z,n_star,evpi,evsi,mc_se_evpi,mc_se_evsi,tp_units,fp_units,engine,seed,n_sims";

namespace detail {

inline std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  std::string s(buf);
  if (s == "-0" || s == "-0.00000") s.erase(0, 1);
  return s;
}

inline nlohmann::ordered_json to_json(const VoiRow& r) {
  const auto& e = r.estimate;
  nlohmann::ordered_json j;
  j["z"] = e.z;
  j["n_star"] = e.n_star;
  j["evpi"] = e.evpi;
  j["evsi"] = e.evsi;
  j["mc_se_evpi"] = e.mc_se_evpi;
  j["mc_se_evsi"] = e.mc_se_evsi;
  j["tp_units"] = r.scaled_evsi.true_positive_units;
  j["fp_units"] = r.scaled_evsi.false_positive_units;
  j["engine"] = e.engine;
  j["seed"] = e.seed;
  j["n_sims"] = e.n_sims;
  j["enb_current"] = {e.enb_current[0], e.enb_current[1], e.enb_current[2]};
  nlohmann::ordered_json diag = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.diagnostics) diag[k] = v;
  j["diagnostics"] = diag;
  return j;
}

}  // namespace detail

// tp_units/fp_units scale the row's EVSI. CSV rounds headline EVPI/EVSI to
// 5 decimals and population units to integers; JSON keeps full precision.
inline void emit(std::ostream& out, const std::vector<VoiRow>& rows, Format format) {
  if (format == Format::json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) arr.push_back(detail::to_json(r));
    out << arr.dump(2) << '\n';
    return;
  }
  out << kVoiColumns << '\n';
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    out << detail::fmt("%.10g", e.z) << ',' << e.n_star << ',' << detail::fmt("%.5f", e.evpi) << ','
        << detail::fmt("%.5f", e.evsi) << ',' << detail::fmt("%.10g", e.mc_se_evpi) << ','
        << detail::fmt("%.10g", e.mc_se_evsi) << ',' << detail::fmt("%.0f", r.scaled_evsi.true_positive_units) << ','
        << detail::fmt("%.0f", r.scaled_evsi.false_positive_units) << ',' << e.engine << ',' << e.seed << ','
        << e.n_sims << '\n';
  }
}

inline std::vector<VoiRow> parse_voi_json(std::istream& in) {
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("invalid JSON: ") + ex.what());
  }
  if (!arr.is_array()) throw DataError("expected a JSON array of VoI rows");
  std::vector<VoiRow> rows;
  try {
    for (const auto& j : arr) {
      VoiRow r;
      auto& e = r.estimate;
      e.z = j.at("z").get<double>();
      e.n_star = j.at("n_star").get<std::int64_t>();
      e.evpi = j.at("evpi").get<double>();
      e.evsi = j.at("evsi").get<double>();
      e.mc_se_evpi = j.at("mc_se_evpi").get<double>();
      e.mc_se_evsi = j.at("mc_se_evsi").get<double>();
      r.scaled_evsi.true_positive_units = j.at("tp_units").get<double>();
      r.scaled_evsi.false_positive_units = j.at("fp_units").get<double>();
      r.scaled_evsi.nb_units_total = r.scaled_evsi.true_positive_units;
      e.engine = j.at("engine").get<std::string>();
      e.seed = j.at("seed").get<std::uint64_t>();
      e.n_sims = j.at("n_sims").get<std::uint64_t>();
      if (j.contains("enb_current")) {
        for (std::size_t i = 0; i < kStrategyCount; ++i) e.enb_current[i] = j["enb_current"].at(i).get<double>();
      }
      if (j.contains("diagnostics")) {
        for (const auto& [k, v] : j["diagnostics"].items()) e.diagnostics[k] = v.get<double>();
      }
      e.evpi_raw = e.diagnostics.count("evpi_raw") ? e.diagnostics["evpi_raw"] : e.evpi;
      e.evsi_raw = e.diagnostics.count("evsi_raw") ? e.diagnostics["evsi_raw"] : e.evsi;
      rows.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw DataError(std::string("malformed VoI row: ") + ex.what());
  }
  return rows;
}

inline std::vector<VoiRow> parse_voi_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kVoiColumns) throw DataError("unexpected VoI CSV header", 1);
  std::vector<VoiRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 11) throw DataError("expected 11 fields", line_no);
    auto num = [&](std::size_t i) {
      const auto v = detail::parse_double(f[i]);
      if (!v) throw DataError("non-numeric field '" + std::string(f[i]) + "'", line_no);
      return *v;
    };
    VoiRow r;
    auto& e = r.estimate;
    e.z = num(0);
    e.n_star = static_cast<std::int64_t>(num(1));
    e.evpi = num(2);
    e.evsi = num(3);
    e.mc_se_evpi = num(4);
    e.mc_se_evsi = num(5);
    r.scaled_evsi.true_positive_units = num(6);
    r.scaled_evsi.false_positive_units = num(7);
    r.scaled_evsi.nb_units_total = r.scaled_evsi.true_positive_units;
    e.engine = std::string(f[8]);
    e.seed = std::stoull(std::string(f[9]));
    e.n_sims = std::stoull(std::string(f[10]));
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void emit_decision_curve(std::ostream& out, const DecisionCurve& c, Format format) {
  if (format == Format::json) {
    nlohmann::ordered_json j;
    j["n_boot"] = c.n_boot;
    j["seed"] = c.seed;
    j["ci_level"] = c.ci_level;
    j["degenerate_replicates"] = c.degenerate_replicates;
    j["smoothed_points"] = c.smoothed_points;
    nlohmann::ordered_json pts = nlohmann::ordered_json::array();
    for (const auto& p : c.points) {
      nlohmann::ordered_json q;
      q["threshold"] = p.z;
      q["nb_none"] = p.nb[0];
      q["nb_model"] = p.nb[1];
      q["nb_all"] = p.nb[2];
      q["delta_nb"] = p.delta_nb;
      q["ci_lo"] = p.ci_lo;
      q["ci_hi"] = p.ci_hi;
      pts.push_back(q);
    }
    j["points"] = pts;
    out << j.dump(2) << '\n';
    return;
  }
  out << "threshold,nb_none,nb_model,nb_all,delta_nb,ci_lo,ci_hi\n";
  for (const auto& p : c.points) {
    out << detail::fmt("%.10g", p.z) << ',' << detail::fmt("%.10g", p.nb[0]) << ',' << detail::fmt("%.10g", p.nb[1])
        << ',' << detail::fmt("%.10g", p.nb[2]) << ',' << detail::fmt("%.10g", p.delta_nb) << ','
        << detail::fmt("%.10g", p.ci_lo) << ',' << detail::fmt("%.10g", p.ci_hi) << '\n';
  }
}

}  // namespace evsi
