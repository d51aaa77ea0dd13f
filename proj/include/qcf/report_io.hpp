#pragma once

// CSV and JSON serialization of scan rows and error reports. CSV output
// starts with '#' lines echoing the run configuration.

#include <nlohmann/json.hpp>

#include <cmath>
#include <charconv>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "qcf/solver.hpp"
#include "qcf/stability.hpp"

namespace qcf {

/// Ordered key=value pairs describing a run.
using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

/// Shortest round-tripping text for a double; infinities as "inf"/"-inf".
inline std::string format_real(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_config_echo(std::ostream& os, const ConfigEcho& echo) {
  for (const auto& [k, v] : echo) os << "# " << k << '=' << v << '\n';
}

inline nlohmann::json config_json(const ConfigEcho& echo) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : echo) j[k] = v;
  return j;
}

// JSON cannot hold infinity; p = inf is written as the string "inf".
inline nlohmann::json real_json(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

inline void to_json(nlohmann::json& j, const ErrorReport& r) {
  j = {{"N", r.N},
       {"K", r.K},
       {"M", r.M},
       {"eps", r.eps},
       {"err_strain_inf", r.err_strain_inf},
       {"bound_rhs", r.bound_rhs},
       {"trunc_star", r.trunc_star},
       {"trunc_bound", r.trunc_bound},
       {"trunc_l1", r.trunc_l1},
       {"d3_inf", r.d3_inf},
       {"identity_discrepancy", r.identity_discrepancy},
       {"error_bound_holds", r.error_bound_holds()},
       {"trunc_bound_holds", r.trunc_bound_holds()},
       {"trunc_l1_holds", r.trunc_l1_holds()}};
}

inline void to_json(nlohmann::json& j, const InfSupScanRow& r) {
  j = {{"N", r.N}, {"K", r.K}, {"p", real_json(r.p)}, {"kind", to_string(r.kind)},
       {"value", r.value}};
}

inline void to_json(nlohmann::json& j, const CoercivityScanRow& r) {
  j = {{"N", r.N}, {"K", r.K}, {"rayleigh_min", r.rayleigh_min},
       {"witness_value", r.witness_value}};
}

inline void write_error_reports_csv(std::ostream& os, const ConfigEcho& echo,
                                    const std::vector<ErrorReport>& rows) {
  write_config_echo(os, echo);
  os << "N,K,M,eps,err_strain_inf,bound_rhs,trunc_star,trunc_bound\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.K << ',' << r.M << ',' << format_real(r.eps) << ','
       << format_real(r.err_strain_inf) << ',' << format_real(r.bound_rhs) << ','
       << format_real(r.trunc_star) << ',' << format_real(r.trunc_bound) << '\n';
  }
}

inline void write_infsup_csv(std::ostream& os, const ConfigEcho& echo,
                             const std::vector<InfSupScanRow>& rows) {
  write_config_echo(os, echo);
  os << "N,K,p,kind,value\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.K << ',' << format_real(r.p) << ',' << to_string(r.kind) << ','
       << format_real(r.value) << '\n';
  }
}

inline void write_coercivity_csv(std::ostream& os, const ConfigEcho& echo,
                                 const std::vector<CoercivityScanRow>& rows) {
  write_config_echo(os, echo);
  os << "N,K,rayleigh_min,witness_value\n";
  for (const auto& r : rows) {
    os << r.N << ',' << r.K << ',' << format_real(r.rayleigh_min) << ','
       << format_real(r.witness_value) << '\n';
  }
}

/// {"config": {...}, "rows": [...], "summary": {...}}
template <class Row>
nlohmann::json report_json(const ConfigEcho& echo, const std::vector<Row>& rows,
                           nlohmann::json summary = nlohmann::json::object()) {
  return {{"config", config_json(echo)}, {"rows", rows}, {"summary", std::move(summary)}};
}

}  // namespace qcf
