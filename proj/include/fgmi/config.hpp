#pragma once

// Experiment description ingestion. Configs are JSON; unknown fields are
// rejected and validation failures name the offending field.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fgmi/cavity.hpp"
#include "fgmi/serialize.hpp"
#include "fgmi/degree.hpp"
#include "fgmi/ldgm.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

struct SpecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnsembleSpec {
  int n = 8;
  int k = 2;
  DegreeDistribution D{{{2, 1.0}}};
  bool ldgm = true;
  double eta = 0.3;
  std::optional<WeightFamily> inline_family;
  double alpha = 0.01;
  double beta = 0.1;
  double T = 0.0;
  std::uint64_t seed = 1;
  SolverSettings solver;
  std::string output;
  nlohmann::json resolved;  // the fully-defaulted document, for provenance

  WeightFamily family() const {
    if (inline_family) return *inline_family;
    return code_weight_family(k, eta);
  }
};

namespace detail {

template <typename T>
T field_as(const nlohmann::json& j, const std::string& name) {
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SpecError("field '" + name + "' has the wrong type");
  }
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& scope) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw SpecError("unknown field '" + scope + it.key() + "'");
}

}  // namespace detail

inline EnsembleSpec parse_spec(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("config must be a JSON object");
  detail::reject_unknown(j, {"n", "k", "D", "family", "eta", "alpha", "beta", "T", "seed",
                             "solver", "output"},
                         "");

  EnsembleSpec spec;
  if (!j.contains("n")) throw SpecError("field 'n' is required");
  spec.n = detail::field_as<int>(j, "n");
  if (spec.n < 1) throw SpecError("field 'n' must be positive");
  if (!j.contains("k")) throw SpecError("field 'k' is required");
  spec.k = detail::field_as<int>(j, "k");
  if (spec.k < 2) throw SpecError("field 'k' must be at least 2");

  if (!j.contains("D")) throw SpecError("field 'D' is required");
  {
    const auto& dj = j.at("D");
    if (!dj.is_object() || dj.empty()) throw SpecError("field 'D' must be a non-empty object");
    std::map<int, double> mass;
    double total = 0.0;
    for (auto it = dj.begin(); it != dj.end(); ++it) {
      int deg;
      try {
        deg = std::stoi(it.key());
      } catch (...) {
        throw SpecError("field 'D' has a non-integer degree key '" + it.key() + "'");
      }
      if (deg < 0) throw SpecError("field 'D' has a negative degree");
      const double p = it.value().get<double>();
      if (p < 0.0) throw SpecError("field 'D' has a negative probability");
      mass[deg] = p;
      total += p;
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw SpecError("field 'D' probabilities sum to " + format_double(total) +
                      ", expected 1");
    spec.D = DegreeDistribution(std::move(mass));
  }

  if (j.contains("family")) {
    const auto& fj = j.at("family");
    if (fj.is_string()) {
      if (fj.get<std::string>() != "ldgm")
        throw SpecError("field 'family' must be \"ldgm\" or an inline table object");
      spec.ldgm = true;
    } else if (fj.is_object()) {
      detail::reject_unknown(fj, {"q", "functions", "prior"}, "family.");
      const int q = detail::field_as<int>(fj, "q");
      std::vector<WeightFunction> fns;
      for (const auto& tj : fj.at("functions")) {
        std::vector<double> table = tj.get<std::vector<double>>();
        std::size_t sz = table.size();
        int arity = 0;
        while (sz > 1) {
          if (sz % static_cast<std::size_t>(q) != 0)
            throw SpecError("family.functions table size is not a power of q");
          sz /= static_cast<std::size_t>(q);
          ++arity;
        }
        if (arity != spec.k) throw SpecError("family.functions arity must equal k");
        fns.emplace_back(q, arity, std::move(table));
      }
      std::vector<double> prior = detail::field_as<std::vector<double>>(fj, "prior");
      try {
        spec.inline_family.emplace(Alphabet(q), std::move(fns), std::move(prior));
        spec.inline_family->validate_open_range();
      } catch (const std::invalid_argument& e) {
        throw SpecError(std::string("field 'family': ") + e.what());
      }
      spec.ldgm = false;
    } else {
      throw SpecError("field 'family' must be a string or object");
    }
  }

  if (j.contains("eta")) spec.eta = detail::field_as<double>(j, "eta");
  if (spec.ldgm && !(spec.eta > 0.0 && spec.eta < 1.0))
    throw SpecError("field 'eta' must lie strictly inside (0,1)");
  if (j.contains("alpha")) spec.alpha = detail::field_as<double>(j, "alpha");
  if (!(spec.alpha >= 0.0 && spec.alpha < 1.0)) throw SpecError("field 'alpha' must be in [0,1)");
  if (j.contains("beta")) spec.beta = detail::field_as<double>(j, "beta");
  if (!(spec.beta > 0.0)) throw SpecError("field 'beta' must be positive");
  if (j.contains("T")) spec.T = detail::field_as<double>(j, "T");
  if (spec.T < 0.0) throw SpecError("field 'T' must be non-negative");
  if (j.contains("seed")) spec.seed = detail::field_as<std::uint64_t>(j, "seed");
  if (j.contains("output")) spec.output = detail::field_as<std::string>(j, "output");

  if (j.contains("solver")) {
    const auto& sj = j.at("solver");
    detail::reject_unknown(
        sj, {"N", "iterations", "damping", "restarts", "tolerance", "mc_samples"}, "solver.");
    if (sj.contains("N")) spec.solver.population_size = detail::field_as<std::size_t>(sj, "N");
    if (sj.contains("iterations")) spec.solver.iterations = detail::field_as<int>(sj, "iterations");
    if (sj.contains("damping")) spec.solver.damping = detail::field_as<double>(sj, "damping");
    if (sj.contains("restarts")) spec.solver.restarts = detail::field_as<int>(sj, "restarts");
    if (sj.contains("tolerance")) spec.solver.tolerance = detail::field_as<double>(sj, "tolerance");
    if (sj.contains("mc_samples"))
      spec.solver.mc_samples = detail::field_as<std::size_t>(sj, "mc_samples");
    try {
      spec.solver.validate();
    } catch (const std::invalid_argument& e) {
      throw SpecError(std::string("field 'solver': ") + e.what());
    }
  }

  // resolved document with defaults filled, used as the provenance header
  spec.resolved = nlohmann::json{
      {"n", spec.n},
      {"k", spec.k},
      {"D", j.at("D")},
      {"family", spec.ldgm ? nlohmann::json("ldgm") : j.at("family")},
      {"eta", spec.eta},
      {"alpha", spec.alpha},
      {"beta", spec.beta},
      {"T", spec.T},
      {"seed", spec.seed},
      {"solver",
       {{"N", spec.solver.population_size},
        {"iterations", spec.solver.iterations},
        {"damping", spec.solver.damping},
        {"restarts", spec.solver.restarts},
        {"tolerance", spec.solver.tolerance},
        {"mc_samples", spec.solver.mc_samples}}},
      {"output", spec.output},
  };
  return spec;
}

}  // namespace fgmi
