// fgmi - random factor-graph ensembles, planted inference oracles and
// cavity-method evaluation of the mutual-information formulas.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fgmi/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"factor-graph mutual information toolkit"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string spec_inline;
  fgmi::CliFlags flags;
  std::uint64_t seed_override = 0;
  bool has_seed = false;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", spec_path, "JSON experiment description file");
    sub->add_option("--spec-json", spec_inline, "inline JSON experiment description");
    sub->add_flag("--bits", flags.bits, "display entropies in bits (files stay in nats)");
    sub->add_option("--out", flags.out_dir, "output directory (default $FGMI_OUT_DIR or '.')");
    sub->add_option("--seed", seed_override, "override the spec seed")
        ->each([&](const std::string&) { has_seed = true; });
    sub->add_option("--samples", flags.samples, "graph samples for MC verbs");
    sub->add_option("--reps", flags.reps, "repetitions for couple/interpolate/check-pos");
  };

  auto* ensemble = app.add_subcommand("ensemble-sample", "sample a planted instance");
  add_common(ensemble);
  auto* mi_predict = app.add_subcommand("mi-predict", "cavity prediction of the MI limit");
  add_common(mi_predict);
  auto* mi_exact = app.add_subcommand("mi-exact", "exact small-instance mutual information");
  add_common(mi_exact);
  auto* mi_sweep = app.add_subcommand("mi-sweep", "prediction across a noise grid");
  add_common(mi_sweep);
  mi_sweep->add_option("--eta", flags.eta_grid, "grid lo:hi:step");
  auto* check_sym = app.add_subcommand("check-sym", "SYM deviation of the weight family");
  add_common(check_sym);
  check_sym->add_option("--tol", flags.sym_tol, "deviation tolerance");
  auto* check_pos = app.add_subcommand("check-pos", "POS moment and Monte Carlo checks");
  add_common(check_pos);
  check_pos->add_option("--l-max", flags.l_max, "largest moment order");
  auto* check_nish = app.add_subcommand("check-nishimori", "posterior vs Gibbs gap");
  add_common(check_nish);
  auto* couple = app.add_subcommand("couple", "coupled exact/approximate generation");
  add_common(couple);
  couple->add_option("--n-grid", flags.n_grid, "grid lo:hi:step");
  auto* interpolate = app.add_subcommand("interpolate", "interpolation ensemble sampling");
  add_common(interpolate);
  interpolate->add_option("--s", flags.s, "active layer");
  interpolate->add_option("--t", flags.t, "within-layer parameter");
  auto* pd_solve = app.add_subcommand("pd-solve", "population dynamics sup search");
  add_common(pd_solve);
  pd_solve->add_option("--functional", flags.functional, "b or l");

  CLI11_PARSE(app, argc, argv);

  std::string text = spec_inline;
  if (text.empty()) {
    if (spec_path.empty()) {
      std::cerr << "error: provide --spec FILE or --spec-json JSON\n";
      return 1;
    }
    std::ifstream in(spec_path);
    if (!in) {
      std::cerr << "error: cannot read spec file " << spec_path << "\n";
      return 1;
    }
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  if (has_seed) flags.seed = seed_override;

  const auto res = fgmi::run_command_catching(app.get_subcommands().front()->get_name(), text, flags);
  if (res.summary.starts_with("error:"))
    std::cerr << res.summary << "\n";
  else
    std::cout << res.summary << "\n";
  return res.exit_code;
}
