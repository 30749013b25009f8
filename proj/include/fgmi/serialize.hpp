#pragma once

// JSON/CSV glue: provenance headers, RFC-4180 quoting, and the file formats
// for populations, Gibbs summaries and solver diagnostics.

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgmi/cavity.hpp"
#include "fgmi/gibbs.hpp"

namespace fgmi {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_quote(const std::string& field) {
  bool needs = false;
  for (char c : field)
    if (c == ',' || c == '"' || c == '\n' || c == '\r') needs = true;
  if (!needs) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i)
    os << (i ? "," : "") << csv_quote(fields[i]);
  os << "\r\n";
}

// every artifact starts with the resolved spec as a JSON comment line
inline void write_provenance(std::ostream& os, const nlohmann::json& resolved) {
  os << "# " << resolved.dump() << "\n";
}

inline nlohmann::json json_of_gibbs_summary(const GibbsSummary& s) {
  nlohmann::json j;
  j["logZ"] = s.log_z;
  j["entropy"] = s.entropy;
  j["marginals"] = s.marginals;
  return j;
}

inline void write_theta_population_csv(std::ostream& os, const ThetaPopulation& pop) {
  for (double t : pop.values()) os << format_double(t) << "\n";
}

inline ThetaPopulation read_theta_population_csv(std::istream& is) {
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    vals.push_back(std::stod(line));
  }
  return ThetaPopulation(std::move(vals));
}

inline void write_population_csv(std::ostream& os, const Population& pop) {
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto m = pop.member(i);
    for (std::size_t a = 0; a < m.size(); ++a)
      os << (a ? "," : "") << format_double(m[a]);
    os << "\n";
  }
}

inline nlohmann::json json_of_solver(const SupResult& res) {
  nlohmann::json j;
  j["value"] = res.value;
  j["stderr"] = res.stderr;
  j["best_candidate"] = res.best_candidate;
  j["restarts"] = nlohmann::json::array();
  for (const auto& d : res.diagnostics) {
    nlohmann::json r;
    r["candidate"] = d.candidate;
    r["restart"] = d.restart;
    r["converged"] = d.converged;
    r["iterations"] = d.iterations;
    r["value"] = d.value;
    r["stderr"] = d.stderr;
    r["trajectory"] = d.trajectory;
    j["restarts"].push_back(std::move(r));
  }
  return j;
}

}  // namespace fgmi
