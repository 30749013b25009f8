#pragma once

// Coupled generation of the layered approximation G_{alpha,beta,d} and the
// exact configuration-model graph G_d from shared randomness.
//
// Per socket draw the approximation proposes its honest sample v from the
// layer-start measure; the exact side accepts the same v with probability
// min(1, nu_ex(v)/nu_ap(v)) and otherwise redraws from the residual
// (nu_ex - min)_+ / TV by rejection. That is the per-draw maximal coupling:
// while no variable repeats within a layer the acceptance ratio is >= 1, so
// clean runs produce identical graphs. A check differs when any of its k
// socket draws differ. Completion checks (the missing O(alpha n) tail added
// after the layers) are coupled the same way but counted separately.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fgmi/degree.hpp"
#include "fgmi/graph.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/stats.hpp"

namespace fgmi {

struct CouplingReport {
  int n = 0;
  double alpha = 0.0;
  double beta = 0.0;
  long long differing_checks = 0;    // C_F: layer-phase checks with different neighborhoods
  long long truncation_events = 0;   // sockets clipped by (delta - grad)_+
  long long layer_collisions = 0;    // repeat draws of a variable within one layer
  long long completion_checks = 0;   // tail checks added after the layers
  long long completion_differing = 0;
  bool exhausted = false;            // a socket pool emptied mid-phase
  std::uint64_t seed = 0;
};

struct CoupledPair {
  FactorGraph approx;  // layered graph including the completion tail
  FactorGraph exact;
  CouplingReport report;
};

inline CoupledPair coupled_generate(const DegreeSequence& d, int k, double alpha, double beta,
                                    std::uint64_t seed) {
  if (d.total() % k != 0)
    throw std::invalid_argument("coupled_generate: k must divide the socket count");
  CoupledPair out{FactorGraph(d.n(), 2), FactorGraph(d.n(), 2), {}};
  out.report.n = d.n();
  out.report.alpha = alpha;
  out.report.beta = beta;
  out.report.seed = seed;

  const auto plan = alpha_beta_plan(d, k, alpha, beta, seed);
  std::vector<long long> counts(d.degrees.begin(), d.degrees.end());
  detail::SocketTree ap(counts), ex(counts);
  Rng rng = Rng(seed).split("coupling");

  // draws one coupled socket pair; ap_frozen = true while ap uses the
  // layer-start measure (no decrement until the layer closes)
  const auto coupled_draw = [&](bool ap_frozen, std::vector<long long>& drawn,
                                std::vector<int>& touched) -> std::pair<int, int> {
    const std::size_t v_ap = ap.draw(rng);
    if (ap_frozen) {
      if (drawn[v_ap] == 0) touched.push_back(static_cast<int>(v_ap));
      if (++drawn[v_ap] > 1) ++out.report.layer_collisions;
    } else {
      ap.add(v_ap, -1);
    }
    // exact side: accept v_ap with min(1, nu_ex/nu_ap)
    const double nu_ap = static_cast<double>(ap_frozen ? ap.count(v_ap) : ap.count(v_ap) + 1) /
                         static_cast<double>(ap_frozen ? ap.total() : ap.total() + 1);
    const double nu_ex =
        static_cast<double>(ex.count(v_ap)) / static_cast<double>(ex.total());
    std::size_t v_ex;
    if (nu_ex >= nu_ap || rng.unit() * nu_ap < nu_ex) {
      v_ex = v_ap;
    } else {
      // residual (nu_ex - nu_ap)_+ by rejection against nu_ex
      for (;;) {
        const std::size_t w = ex.draw(rng);
        const double pw_ex =
            static_cast<double>(ex.count(w)) / static_cast<double>(ex.total());
        const double pw_ap = static_cast<double>(ap_frozen ? ap.count(w) : ap.count(w) + (w == v_ap ? 1 : 0)) /
                             static_cast<double>(ap_frozen ? ap.total() : ap.total() + 1);
        if (pw_ex <= pw_ap) continue;
        if (rng.unit() * pw_ex < pw_ex - pw_ap) {
          v_ex = w;
          break;
        }
      }
    }
    ex.add(v_ex, -1);
    return {static_cast<int>(v_ap), static_cast<int>(v_ex)};
  };

  // ---- layer phase ----
  std::vector<long long> drawn(static_cast<std::size_t>(d.n()), 0);
  std::vector<int> touched;
  bool aborted = false;
  for (std::size_t s = 0; s < plan.counts.size() && !aborted; ++s) {
    touched.clear();
    std::fill(drawn.begin(), drawn.end(), 0);
    for (long i = 0; i < plan.counts[s] && !aborted; ++i) {
      if (ap.total() <= 0 || ex.total() < k) {
        out.report.exhausted = true;
        aborted = true;
        break;
      }
      std::vector<int> nb_ap, nb_ex;
      nb_ap.reserve(static_cast<std::size_t>(k));
      nb_ex.reserve(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        const auto [a, e] = coupled_draw(true, drawn, touched);
        nb_ap.push_back(a);
        nb_ex.push_back(e);
      }
      if (nb_ap != nb_ex) ++out.report.differing_checks;
      out.approx.add_check(std::move(nb_ap));
      out.exact.add_check(std::move(nb_ex));
    }
    for (int x : touched) {
      const auto xi = static_cast<std::size_t>(x);
      const long long have = ap.count(xi);
      const long long dec = std::min(have, drawn[xi]);
      out.report.truncation_events += drawn[xi] - dec;
      ap.add(xi, -dec);
      drawn[xi] = 0;
    }
  }

  // ---- completion phase: finish both graphs with the exact procedure ----
  while (ex.total() >= k && ap.total() >= k) {
    std::vector<long long> unused(static_cast<std::size_t>(d.n()), 0);
    std::vector<int> no_touch;
    std::vector<int> nb_ap, nb_ex;
    for (int j = 0; j < k; ++j) {
      const auto [a, e] = coupled_draw(false, unused, no_touch);
      nb_ap.push_back(a);
      nb_ex.push_back(e);
    }
    ++out.report.completion_checks;
    if (nb_ap != nb_ex) ++out.report.completion_differing;
    out.approx.add_check(std::move(nb_ap));
    out.exact.add_check(std::move(nb_ex));
  }
  // drain the exact side alone if truncation shrank the approx pool
  while (ex.total() >= k) {
    std::vector<int> nb;
    for (int j = 0; j < k; ++j) {
      const std::size_t v = ex.draw(rng);
      ex.add(v, -1);
      nb.push_back(static_cast<int>(v));
    }
    out.exact.add_check(std::move(nb));
    ++out.report.completion_checks;
    ++out.report.completion_differing;
  }
  return out;
}

inline CoupledPair coupled_generate(int n, const DegreeDistribution& D, int k, double alpha,
                                    double beta, std::uint64_t seed) {
  const auto part = sample_d_partition(n, D, Rng(seed).split("coupling-dpart").next_u64());
  return coupled_generate(part.d, k, alpha, beta, seed);
}

struct CouplingScalingResult {
  std::vector<int> n_grid;
  std::vector<double> mean_cf;
  std::vector<double> stderr_cf;
  std::vector<long long> truncations;
  SlopeFit fit;  // least-squares slope of mean C_F against n, with 95% CI
};

inline CouplingScalingResult coupling_scaling_stat(const std::vector<int>& n_grid, int reps,
                                                   double alpha, double beta,
                                                   const DegreeDistribution& D, int k,
                                                   std::uint64_t seed) {
  CouplingScalingResult out;
  out.n_grid = n_grid;
  Rng root = Rng(seed).split("scaling");
  for (std::size_t gi = 0; gi < n_grid.size(); ++gi) {
    Accumulator acc;
    long long trunc = 0;
    for (int r = 0; r < reps; ++r) {
      const auto pair = coupled_generate(n_grid[gi], D, k, alpha, beta,
                                         root.split(gi).split(static_cast<std::uint64_t>(r)).next_u64());
      acc.add(static_cast<double>(pair.report.differing_checks));
      trunc += pair.report.truncation_events;
    }
    out.mean_cf.push_back(acc.mean);
    out.stderr_cf.push_back(acc.stderr_mean());
    out.truncations.push_back(trunc);
  }
  std::vector<double> x(n_grid.begin(), n_grid.end());
  out.fit = least_squares_slope(x, out.mean_cf);
  return out;
}

}  // namespace fgmi
