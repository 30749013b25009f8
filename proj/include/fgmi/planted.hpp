#pragma once

// Teacher-student sampling: plant a uniform ground truth, build the
// unweighted graph, then tilt each check's weight by its evaluation at the
// truth. Includes pinning, the exact Bayes-posterior-versus-Gibbs check, and
// the Monte Carlo conditional entropy with exact inner enumeration.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fgmi/gibbs.hpp"
#include "fgmi/graph.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/stats.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

struct PlantedEnsemble {
  int n;
  int k;
  DegreeDistribution D;
  WeightFamily family;
  std::optional<DegreeSequence> degrees;  // overrides the D-partition when set
  bool use_approx = false;                // layered G_{alpha,beta,D} instead of the exact model
  double alpha = 0.01;
  double beta = 0.1;
};

struct PlantedInstance {
  Assignment truth;
  FactorGraph graph;  // weighted; check weight_id = drawn family index (the sampling trace)
  struct Meta {
    int n = 0, k = 0;
    bool use_approx = false;
    double alpha = 0.0, beta = 0.0;
    std::uint64_t seed = 0;
  } meta;
};

namespace detail {

// tilted weight choice of TCH3 with the prior in the denominator:
// P[psi_a = psi_i] = p_i psi_i(sigma*(da)) / sum_j p_j psi_j(sigma*(da))
inline int sample_tilted_weight(const WeightFamily& fam, std::size_t table_index, Rng& rng) {
  double total = 0.0;
  for (std::size_t j = 0; j < fam.functions.size(); ++j)
    total += fam.prior[j] * fam.functions[j].at_index(table_index);
  if (!(total > 0.0))
    throw std::domain_error("sample_tilted_weight: zero tilt denominator");
  double u = rng.unit() * total;
  for (std::size_t j = 0; j < fam.functions.size(); ++j) {
    u -= fam.prior[j] * fam.functions[j].at_index(table_index);
    if (u < 0.0) return static_cast<int>(j);
  }
  return static_cast<int>(fam.functions.size()) - 1;
}

inline std::size_t check_table_index(const WeightFamily& fam, const Check& c,
                                     const Assignment& sigma) {
  std::size_t idx = 0;
  for (int x : c.neighbors)
    idx = idx * static_cast<std::size_t>(fam.alphabet.size()) +
          static_cast<std::size_t>(sigma[static_cast<std::size_t>(x)]);
  return idx;
}

}  // namespace detail

inline PlantedInstance sample_planted(const PlantedEnsemble& spec, std::uint64_t seed) {
  Rng root(seed);
  const int q = spec.family.alphabet.size();

  Assignment truth(static_cast<std::size_t>(spec.n));
  Rng sig = root.split("sigma");
  for (auto& s : truth) s = static_cast<int>(sig.below(static_cast<std::uint64_t>(q)));

  DegreeSequence d = spec.degrees
                         ? *spec.degrees
                         : sample_d_partition(spec.n, spec.D, root.split("degrees").next_u64()).d;
  if (d.n() != spec.n) throw std::invalid_argument("sample_planted: degree sequence length");

  FactorGraph structure(spec.n, q);
  if (spec.use_approx) {
    auto plan = alpha_beta_plan(d, spec.k, spec.alpha, spec.beta, root.split("plan").next_u64());
    auto res = layered_model(d, plan.counts, spec.k, root.split("graph").next_u64(), q);
    if (res.exhausted)
      throw std::runtime_error("sample_planted: layered construction exhausted its sockets");
    structure = std::move(res.graph);
  } else {
    structure = configuration_model(d, spec.k, root.split("graph").next_u64(), q);
  }

  PlantedInstance out{std::move(truth), FactorGraph(spec.n, q), {}};
  out.meta = {spec.n, spec.k, spec.use_approx, spec.alpha, spec.beta, seed};
  for (const auto& f : spec.family.functions) out.graph.add_table(f);
  Rng wts = root.split("weights");
  for (const auto& c : structure.checks()) {
    const std::size_t idx = detail::check_table_index(spec.family, c, out.truth);
    const int choice = detail::sample_tilted_weight(spec.family, idx, wts);
    out.graph.add_check(c.neighbors, choice);
  }
  return out;
}

// ---- pinning ----

struct PinningSpec {
  double T = 0.0;
  double theta = 0.0;       // uniform on [0,T]
  std::vector<int> pinset;  // each variable included independently with prob theta/n
};

inline PinningSpec sample_pin_set(int n, double T, std::uint64_t seed) {
  if (T < 0.0) throw std::invalid_argument("sample_pin_set: T must be >= 0");
  PinningSpec out;
  out.T = T;
  Rng rng = Rng(seed).split("pinning");
  out.theta = T * rng.unit();
  const double p = out.theta / static_cast<double>(n);
  for (int x = 0; x < n; ++x)
    if (rng.bernoulli(p)) out.pinset.push_back(x);
  return out;
}

// G plus indicator pins copying the reference on U; original checks untouched
inline FactorGraph pin_graph(const FactorGraph& g, const std::vector<int>& pinset,
                             const Assignment& reference) {
  if (static_cast<int>(reference.size()) != g.n())
    throw std::invalid_argument("pin_graph: reference length must equal n");
  FactorGraph out = g;
  for (int x : pinset) out.add_pin(x, reference[static_cast<std::size_t>(x)]);
  return out;
}

// ---- Nishimori check ----

namespace detail {

// exact Bayes posterior P[sigma* = . | G] over Omega^n from the recorded
// per-check tilts; the sigma-dependent denominators are kept on purpose
inline std::vector<double> planted_posterior(const FactorGraph& g, const WeightFamily& fam,
                                             std::size_t cap_states) {
  const std::size_t states = state_count_checked(g, cap_states);
  const int n = g.n(), q = g.q();
  std::vector<double> post(states, 0.0);
  std::vector<int> sigma(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  for (std::size_t idx = 0; idx < states; ++idx) {
    double v = 1.0;
    for (const auto& p : g.pins())
      if (sigma[static_cast<std::size_t>(p.variable)] != p.symbol) {
        v = 0.0;
        break;
      }
    if (v > 0.0) {
      for (const auto& c : g.checks()) {
        const std::size_t ti = check_table_index(fam, c, sigma);
        double denom = 0.0;
        for (std::size_t j = 0; j < fam.functions.size(); ++j)
          denom += fam.prior[j] * fam.functions[j].at_index(ti);
        const std::size_t wi = static_cast<std::size_t>(c.weight_id);
        v *= fam.prior[wi] * fam.functions[wi].at_index(ti) / denom;
        if (v == 0.0) break;
      }
    }
    post[idx] = v;
    total += v;
    for (int x = n - 1; x >= 0; --x) {
      if (++sigma[static_cast<std::size_t>(x)] < q) break;
      sigma[static_cast<std::size_t>(x)] = 0;
    }
  }
  if (!(total > 0.0)) throw std::domain_error("planted_posterior: zero mass");
  for (double& v : post) v /= total;
  return post;
}

}  // namespace detail

struct NishimoriOptions {
  bool pinned = false;
  double T = 0.0;
  std::size_t cap_states = kDefaultStateCap;
};

// max over sampled teacher graphs of TV(exact posterior, Gibbs measure)
inline double nishimori_gap(const PlantedEnsemble& spec, int graph_samples,
                            std::uint64_t seed, const NishimoriOptions& opts = {}) {
  Rng root = Rng(seed).split("nishimori");
  double worst = 0.0;
  for (int s = 0; s < graph_samples; ++s) {
    auto inst = sample_planted(spec, root.split(static_cast<std::uint64_t>(s)).next_u64());
    FactorGraph g = inst.graph;
    if (opts.pinned) {
      const auto pins = sample_pin_set(spec.n, opts.T,
                                       root.split("pins", static_cast<std::uint64_t>(s)).next_u64());
      g = pin_graph(g, pins.pinset, inst.truth);
    }
    const auto post = detail::planted_posterior(g, spec.family, opts.cap_states);
    const auto w = detail::weight_vector(g, opts.cap_states);
    double z = 0.0;
    for (double v : w) z += v;
    double tv = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) tv += std::fabs(post[i] - w[i] / z);
    worst = std::max(worst, tv / 2.0);
  }
  return worst;
}

// ---- conditional entropy ----

namespace detail {

// fast H(mu_G) for parity-family graphs via the unsatisfied-check histogram
inline std::optional<double> parity_graph_entropy(const FactorGraph& g, double eta) {
  if (g.q() != 2 || g.n() > 26 || !g.pins().empty()) return std::nullopt;
  const int n = g.n();
  const int m = static_cast<int>(g.checks().size());
  const double c = 1.0 - 2.0 * eta;
  std::vector<std::uint32_t> masks;
  std::vector<int> targets;  // parity bit that makes the check satisfied
  masks.reserve(static_cast<std::size_t>(m));
  for (const auto& ch : g.checks()) {
    const auto& t = g.weight_of(ch).table();
    const double c0 = t[0] - 1.0;
    // expect 1 + s c * parity; s from the sign of the all-plus entry
    if (std::fabs(std::fabs(c0) - std::fabs(c)) > 1e-12) return std::nullopt;
    std::uint32_t mask = 0;
    for (int x : ch.neighbors) mask ^= (std::uint32_t{1} << x);
    masks.push_back(mask);
    targets.push_back(c0 >= 0.0 ? 0 : 1);
  }
  std::vector<double> hist(static_cast<std::size_t>(m) + 1, 0.0);
  const std::uint32_t states = std::uint32_t{1} << n;
  for (std::uint32_t sigma = 0; sigma < states; ++sigma) {
    int unsat = 0;
    for (int a = 0; a < m; ++a)
      unsat += (__builtin_popcount(sigma & masks[static_cast<std::size_t>(a)]) & 1) !=
               targets[static_cast<std::size_t>(a)];
    hist[static_cast<std::size_t>(unsat)] += 1.0;
  }
  const double cabs = std::fabs(c);
  double z = 0.0, wlogw = 0.0;
  for (int u = 0; u <= m; ++u) {
    if (hist[static_cast<std::size_t>(u)] == 0.0) continue;
    double w = 1.0;
    for (int i = 0; i < m - u; ++i) w *= 1.0 + cabs;
    for (int i = 0; i < u; ++i) w *= 1.0 - cabs;
    if (w <= 0.0) continue;
    z += hist[static_cast<std::size_t>(u)] * w;
    wlogw += hist[static_cast<std::size_t>(u)] * w * std::log(w);
  }
  if (!(z > 0.0)) return std::nullopt;
  return std::log(z) - wlogw / z;
}

}  // namespace detail

struct ConditionalEntropyResult {
  double h_per_n = 0.0;       // mean of H(mu_G)/n over sampled graphs
  double stderr = 0.0;
  double mi_per_n = 0.0;      // ln q - h_per_n
  int samples = 0;
};

// Outer Monte Carlo over planted graphs, exact inner entropy (the inner
// value equals H(sigma* | G* = G) by the Nishimori identity).
inline ConditionalEntropyResult conditional_entropy_mc(const PlantedEnsemble& spec,
                                                       int graph_samples, std::uint64_t seed,
                                                       std::size_t cap_states = kDefaultStateCap) {
  Rng root = Rng(seed).split("cond-entropy");
  const auto eta = parity_family_eta_from_tables(spec.family);
  Accumulator acc;
  for (int s = 0; s < graph_samples; ++s) {
    auto inst = sample_planted(spec, root.split(static_cast<std::uint64_t>(s)).next_u64());
    double h;
    std::optional<double> fast;
    if (eta) fast = detail::parity_graph_entropy(inst.graph, *eta);
    if (fast)
      h = *fast;
    else
      h = gibbs_marginals(inst.graph, cap_states).entropy;
    acc.add(h / static_cast<double>(spec.n));
  }
  ConditionalEntropyResult out;
  out.h_per_n = acc.mean;
  out.stderr = acc.stderr_mean();
  out.mi_per_n = std::log(static_cast<double>(spec.family.alphabet.size())) - acc.mean;
  out.samples = graph_samples;
  return out;
}

}  // namespace fgmi
