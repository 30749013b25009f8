#pragma once

// Command dispatch behind the fgmi binary. Everything is a pure function of
// (spec, flags): reruns with the same seed produce byte-identical artifacts.
// Exit codes: 0 success, 1 validation error, 2 numeric-contract failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fgmi/config.hpp"
#include "fgmi/coupling.hpp"
#include "fgmi/gibbs.hpp"
#include "fgmi/interpolate.hpp"
#include "fgmi/ldgm.hpp"
#include "fgmi/planted.hpp"
#include "fgmi/serialize.hpp"

namespace fgmi {

struct CliFlags {
  std::optional<std::uint64_t> seed;  // overrides the spec seed
  bool bits = false;                  // display conversion only; files stay in nats
  std::string out_dir;                // else $FGMI_OUT_DIR, else spec.output, else "."
  int samples = 100;                  // graph samples (mi-exact, check-nishimori)
  int reps = 200;                     // repetitions (couple, interpolate, check-pos pairs)
  std::string eta_grid = "0.05:0.5:0.05";
  std::string n_grid = "100:1000:100";
  long s = 1;                         // interpolation layer
  double t = 0.0;                     // interpolation parameter
  double sym_tol = 1e-12;
  int l_max = 10;
  std::string functional = "b";       // pd-solve: "b" or "l"
};

struct CommandResult {
  int exit_code = 0;
  std::string summary;
  std::vector<std::string> artifacts;
};

namespace detail {

inline std::vector<double> parse_grid(const std::string& text) {
  double lo = 0, hi = 0, step = 0;
  char c1 = 0, c2 = 0;
  std::istringstream ss(text);
  if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
    throw SpecError("grid must look like lo:hi:step");
  std::vector<double> grid;
  for (double v = lo; v <= hi + 1e-12; v += step) grid.push_back(v);
  return grid;
}

inline std::string out_path(const CliFlags& flags, const EnsembleSpec& spec,
                            const std::string& name) {
  std::string dir = flags.out_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("FGMI_OUT_DIR")) dir = env;
  }
  if (dir.empty()) dir = spec.output;
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

inline double display(double nats, bool bits) { return bits ? nats / std::log(2.0) : nats; }

}  // namespace detail

inline CommandResult run_command(const std::string& verb, EnsembleSpec spec,
                                 const CliFlags& flags) {
  CommandResult res;
  if (flags.seed) spec.seed = *flags.seed;
  spec.resolved["seed"] = spec.seed;
  nlohmann::json prov = spec.resolved;
  prov["verb"] = verb;

  const auto open_artifact = [&](const std::string& name, std::ofstream& os) {
    const std::string path = detail::out_path(flags, spec, name);
    os.open(path, std::ios::binary);
    if (!os) throw SpecError("cannot open output file " + path);
    write_provenance(os, prov);
    res.artifacts.push_back(path);
    return path;
  };

  std::ostringstream summary;

  if (verb == "ensemble-sample") {
    PlantedEnsemble ens{spec.n, spec.k, spec.D, spec.family(), std::nullopt,
                        false, spec.alpha, spec.beta};
    auto inst = sample_planted(ens, spec.seed);
    std::ofstream os;
    open_artifact("ensemble.graph", os);
    write_graph(os, inst.graph);
    if (spec.ldgm) {
      std::ofstream cs;
      open_artifact("ensemble.code", cs);
      write_code(cs, inst.graph);
    }
    summary << "ensemble-sample: n=" << spec.n << " checks=" << inst.graph.checks().size()
            << " seed=" << spec.seed;
  } else if (verb == "check-sym") {
    const auto fam = spec.family();
    const double dev = check_sym(fam);
    std::ofstream os;
    open_artifact("check_sym.json", os);
    nlohmann::json j{{"deviation", dev}, {"xi", fam.xi}, {"tolerance", flags.sym_tol}};
    os << j.dump(2) << "\n";
    summary << "check-sym: max deviation " << format_double(dev);
    if (dev > flags.sym_tol) res.exit_code = 2;
  } else if (verb == "check-pos") {
    const auto fam = spec.family();
    Rng rng = Rng(spec.seed).split("check-pos");
    std::ofstream os;
    open_artifact("check_pos.csv", os);
    write_csv_row(os, {"pair", "l", "moment_value"});
    bool violated = false;
    double worst = 0.0;
    const int pairs = std::max(flags.reps, 1);
    for (int p = 0; p < pairs; ++p) {
      std::vector<double> ha(32), hb(32);
      for (auto& v : ha) v = 2.0 * rng.unit() - 1.0;
      for (auto& v : hb) v = 2.0 * rng.unit() - 1.0;
      ThetaPopulation pa = ThetaPopulation::symmetric_pairs(ha);
      ThetaPopulation pb = ThetaPopulation::symmetric_pairs(hb);
      const auto vals = check_pos_moments(spec.k, spec.eta, pa, pb, flags.l_max);
      for (std::size_t l = 1; l <= vals.size(); ++l) {
        write_csv_row(os, {std::to_string(p), std::to_string(l), format_double(vals[l - 1])});
        worst = std::min(worst, vals[l - 1]);
        if (vals[l - 1] < -1e-9) violated = true;
      }
    }
    // Monte Carlo check of the full POS display on one random pair
    std::vector<double> ha(64), hb(64);
    for (auto& v : ha) v = 2.0 * rng.unit() - 1.0;
    for (auto& v : hb) v = 2.0 * rng.unit() - 1.0;
    const auto general = check_pos_general(
        fam, ThetaPopulation::symmetric_pairs(ha).to_population(),
        ThetaPopulation::symmetric_pairs(hb).to_population(), spec.solver.mc_samples,
        Rng(spec.seed).split("pos-general").next_u64());
    if (general.value < -3.0 * general.stderr) violated = true;
    summary << "check-pos: worst moment " << format_double(worst) << ", general "
            << format_double(general.value) << " +- " << format_double(general.stderr);
    if (violated) res.exit_code = 2;
  } else if (verb == "check-nishimori") {
    PlantedEnsemble ens{spec.n, spec.k, spec.D, spec.family(), std::nullopt,
                        false, spec.alpha, spec.beta};
    const double gap = nishimori_gap(ens, flags.samples, spec.seed);
    double pinned_gap = 0.0;
    if (spec.T > 0.0) {
      NishimoriOptions opts;
      opts.pinned = true;
      opts.T = spec.T;
      pinned_gap = nishimori_gap(ens, flags.samples, spec.seed + 1, opts);
    }
    std::ofstream os;
    open_artifact("check_nishimori.json", os);
    nlohmann::json j{{"gap", gap}, {"pinned_gap", pinned_gap}, {"graphs", flags.samples}};
    os << j.dump(2) << "\n";
    summary << "check-nishimori: gap " << format_double(gap);
    if (spec.T > 0.0) summary << " pinned " << format_double(pinned_gap);
    if (gap > 1e-9 || pinned_gap > 1e-9) res.exit_code = 2;
  } else if (verb == "mi-exact") {
    PlantedEnsemble ens{spec.n, spec.k, spec.D, spec.family(), std::nullopt,
                        false, spec.alpha, spec.beta};
    const auto cond = conditional_entropy_mc(ens, flags.samples, spec.seed);
    std::ofstream os;
    open_artifact("mi_exact.csv", os);
    write_csv_row(os, {"n", "k", "eta", "alpha", "beta", "T", "samples", "H_per_n", "stderr",
                       "MI_per_n"});
    write_csv_row(os, {std::to_string(spec.n), std::to_string(spec.k), format_double(spec.eta),
                       format_double(spec.alpha), format_double(spec.beta),
                       format_double(spec.T), std::to_string(flags.samples),
                       format_double(cond.h_per_n), format_double(cond.stderr),
                       format_double(cond.mi_per_n)});
    summary << "mi-exact: MI/n " << format_double(detail::display(cond.mi_per_n, flags.bits))
            << " +- " << format_double(detail::display(cond.stderr, flags.bits))
            << (flags.bits ? " bits" : " nats");
    if (spec.ldgm) {
      // codeword-side oracle I(X;Y)/n on one sampled code from the spec
      const auto inst = sample_planted(ens, spec.seed);
      const double code_mi = exact_code_mi(inst.graph, spec.eta) / static_cast<double>(spec.n);
      std::ofstream cs;
      open_artifact("mi_exact_code.json", cs);
      nlohmann::json j{{"exact_code_mi_per_n", code_mi},
                       {"checks", inst.graph.checks().size()}};
      cs << j.dump(2) << "\n";
      summary << ", codeword I(X;Y)/n " << format_double(detail::display(code_mi, flags.bits));
    }
  } else if (verb == "mi-predict") {
    const auto fam = spec.family();
    nlohmann::json j;
    double headline = 0.0;
    if (spec.ldgm) {
      const auto pred = mi_predict_codes(spec.k, spec.D, spec.eta, spec.solver, spec.seed);
      j["codes"] = {{"sup_L", pred.sup_value},
                    {"sup_stderr", pred.sup_stderr},
                    {"prediction_paper_constant", pred.value_paper_constant},
                    {"prediction_general_constant", pred.value_general_constant}};
      j["codes"]["solver"] = json_of_solver(pred.solver);
      headline = pred.value_general_constant;
    }
    const auto gen = mi_predict_general(spec.D, fam, spec.solver, spec.seed + 1);
    j["general"] = {{"sup_B", gen.sup_value},
                    {"sup_stderr", gen.sup_stderr},
                    {"channel_term", gen.channel_term},
                    {"prediction", gen.value},
                    {"sym_deviation", gen.sym_deviation}};
    j["general"]["solver"] = json_of_solver(gen.solver);
    if (!spec.ldgm) headline = gen.value;
    std::ofstream os;
    open_artifact("mi_predict.json", os);
    os << j.dump(2) << "\n";
    summary << "mi-predict: " << format_double(detail::display(headline, flags.bits))
            << (flags.bits ? " bits" : " nats") << " per variable";
  } else if (verb == "mi-sweep") {
    const auto grid = detail::parse_grid(flags.eta_grid);
    std::ofstream os;
    open_artifact("mi_sweep.csv", os);
    write_csv_row(os, {"eta", "sup_L", "sup_stderr", "prediction_paper_constant",
                       "prediction_general_constant"});
    for (double eta : grid) {
      const auto pred = mi_predict_codes(spec.k, spec.D, eta, spec.solver, spec.seed);
      write_csv_row(os, {format_double(eta), format_double(pred.sup_value),
                         format_double(pred.sup_stderr),
                         format_double(pred.value_paper_constant),
                         format_double(pred.value_general_constant)});
    }
    summary << "mi-sweep: " << grid.size() << " rows";
  } else if (verb == "couple") {
    const auto ns = detail::parse_grid(flags.n_grid);
    std::vector<int> n_grid(ns.begin(), ns.end());
    const auto stat =
        coupling_scaling_stat(n_grid, flags.reps, spec.alpha, spec.beta, spec.D, spec.k, spec.seed);
    std::ofstream os;
    open_artifact("couple.csv", os);
    write_csv_row(os, {"n", "alpha", "beta", "mean_CF", "stderr", "truncations"});
    for (std::size_t i = 0; i < n_grid.size(); ++i)
      write_csv_row(os, {std::to_string(n_grid[i]), format_double(spec.alpha),
                         format_double(spec.beta), format_double(stat.mean_cf[i]),
                         format_double(stat.stderr_cf[i]), std::to_string(stat.truncations[i])});
    std::ofstream fs;
    open_artifact("couple_fit.json", fs);
    nlohmann::json j{{"slope", stat.fit.slope},
                     {"slope_stderr", stat.fit.slope_stderr},
                     {"ci_low", stat.fit.ci_low},
                     {"ci_high", stat.fit.ci_high}};
    fs << j.dump(2) << "\n";
    summary << "couple: slope " << format_double(stat.fit.slope) << " CI ["
            << format_double(stat.fit.ci_low) << ", " << format_double(stat.fit.ci_high) << "]";
  } else if (verb == "interpolate") {
    const auto fam = spec.family();
    const auto pop = Population::delta_uniform(fam.alphabet.size(),
                                               std::max<std::size_t>(spec.solver.population_size, 2));
    InterpolationPoint point(flags.s, flags.t, spec.T, pop);
    Accumulator acc;
    std::ofstream os;
    open_artifact("interpolate.csv", os);
    write_csv_row(os, {"rep", "logZ_per_n", "kary", "unary", "skipped"});
    Rng root = Rng(spec.seed).split("interpolate-cli");
    for (int r = 0; r < flags.reps; ++r) {
      const auto sample = interpolation_sample(spec.n, spec.D, spec.k, fam, point, spec.beta,
                                               root.split(static_cast<std::uint64_t>(r)).next_u64(),
                                               spec.alpha);
      double logz;
      if (sample.kary_checks == 0)
        logz = unary_forest_log_z(sample.graph);
      else
        logz = partition_function(sample.graph).log_z;
      const double per_n = logz / static_cast<double>(spec.n);
      acc.add(per_n);
      write_csv_row(os, {std::to_string(r), format_double(per_n),
                         std::to_string(sample.kary_checks), std::to_string(sample.unary_checks),
                         std::to_string(sample.skipped_factors)});
    }
    const auto forest = closed_form_forest(spec.D, fam, pop, spec.solver.mc_samples,
                                           Rng(spec.seed).split("forest").next_u64());
    std::ofstream fs;
    open_artifact("interpolate_summary.json", fs);
    nlohmann::json j{{"mean_logZ_per_n", acc.mean},
                     {"stderr", acc.stderr_mean()},
                     {"closed_form_forest", forest.value},
                     {"closed_form_stderr", forest.stderr},
                     {"s", flags.s},
                     {"t", flags.t}};
    fs << j.dump(2) << "\n";
    summary << "interpolate: logZ/n " << format_double(acc.mean) << " +- "
            << format_double(acc.stderr_mean()) << ", forest " << format_double(forest.value);
  } else if (verb == "pd-solve") {
    if (!spec.ldgm)
      throw SpecError("pd-solve requires the ldgm family (no general-family recursion)");
    const auto kind = flags.functional == "l" ? CodeFunctional::l_form : CodeFunctional::b_form;
    const auto sup = solve_sup_code(spec.k, spec.D, spec.eta, kind, spec.solver, spec.seed);
    std::ofstream ps;
    open_artifact("pd_solve_population.csv", ps);
    write_theta_population_csv(ps, sup.argmax);
    std::ofstream os;
    open_artifact("pd_solve.json", os);
    os << json_of_solver(sup).dump(2) << "\n";
    summary << "pd-solve: sup " << format_double(sup.value) << " +- "
            << format_double(sup.stderr) << " (" << sup.best_candidate << ")";
  } else {
    throw SpecError("unknown verb '" + verb + "'");
  }

  res.summary = summary.str();
  return res;
}

// exception-to-exit-code wrapper used by the binary and the tests
inline CommandResult run_command_catching(const std::string& verb, const std::string& spec_text,
                                          const CliFlags& flags) {
  try {
    return run_command(verb, parse_spec(spec_text), flags);
  } catch (const SpecError& e) {
    return {1, std::string("error: ") + e.what(), {}};
  } catch (const EnumerationCapError& e) {
    return {1, std::string("error: ") + e.what(), {}};
  } catch (const std::invalid_argument& e) {
    return {1, std::string("error: ") + e.what(), {}};
  } catch (const std::exception& e) {
    return {2, std::string("error: ") + e.what(), {}};
  }
}

}  // namespace fgmi
