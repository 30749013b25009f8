#pragma once

// The layered interpolation ensemble: below the active layer s the k-ary
// checks of the approximation, above it blocks of k unary factors whose
// weight functions average a k-ary weight over population samples, with the
// planted tilt applied to every weight choice, and pins on top.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fgmi/cavity.hpp"
#include "fgmi/gibbs.hpp"
#include "fgmi/graph.hpp"
#include "fgmi/planted.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

struct InterpolationPoint {
  long s = 1;        // active layer in [1, s_max]
  double t = 0.0;    // within-layer interpolation parameter
  double T = 0.0;    // pin strength
  Population pop;    // source of the unary weight averages

  InterpolationPoint(long s_, double t_, double T_, Population pop_)
      : s(s_), t(t_), T(T_), pop(std::move(pop_)) {
    if (s < 1) throw std::invalid_argument("InterpolationPoint: s must be >= 1");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("InterpolationPoint: t in [0,1]");
    if (T < 0.0) throw std::invalid_argument("InterpolationPoint: T >= 0");
  }
};

struct InterpolationSample {
  FactorGraph graph;
  Assignment truth;           // the reference assignment of the tilt and the pins
  long s_max = 0;
  long long kary_checks = 0;
  long long unary_checks = 0;
  long long skipped_factors = 0;  // draws abandoned after socket exhaustion
  double theta = 0.0;             // realized pin intensity
};

namespace detail {

// planted-tilted unary weight of I4/eq:distrPreB via rejection: propose
// (i, psi, mu_1..mu_{k-1}) from the prior and accept with the evaluation at
// the planted symbol over the sup bound 2
inline WeightFunction sample_tilted_unary(const WeightFamily& fam, const Population& pop,
                                          int planted_symbol, Rng& rng) {
  const int q = fam.alphabet.size();
  const int k = fam.arity();
  std::vector<double> table(static_cast<std::size_t>(q), 0.0);
  std::vector<std::span<const double>> mu(static_cast<std::size_t>(k));
  for (;;) {
    const std::size_t fi = sample_prior_index(fam, rng);
    const int slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    for (int j = 0; j < k; ++j)
      if (j != slot) mu[static_cast<std::size_t>(j)] = pop.member(rng.below(pop.size()));
    check_message(fam.functions[fi], slot, mu, table);
    const double accept = table[static_cast<std::size_t>(planted_symbol)] / 2.0;
    if (rng.unit() < accept) return WeightFunction(q, 1, table);
  }
}

}  // namespace detail

// Builds one pinned interpolation graph G*_{T,s,t} on a degree sequence d.
inline InterpolationSample interpolation_sample(const DegreeSequence& d, int k,
                                                const WeightFamily& family,
                                                const InterpolationPoint& point, double beta,
                                                std::uint64_t seed, double alpha = 0.0) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw std::invalid_argument("interpolation_sample: alpha in [0,1)");
  if (beta <= 0.0) throw std::invalid_argument("interpolation_sample: beta must be positive");
  if (point.pop.q() != family.alphabet.size())
    throw std::invalid_argument("interpolation_sample: population alphabet mismatch");
  const int q = family.alphabet.size();
  const int n = d.n();
  Rng root = Rng(seed).split("interpolation");

  InterpolationSample out{FactorGraph(n, q), {}};
  const long s_max = static_cast<long>(std::floor(
      (1.0 - alpha) * static_cast<double>(d.total()) / beta / static_cast<double>(k)));
  out.s_max = s_max;
  if (point.s > s_max && s_max > 0)
    throw std::invalid_argument("interpolation_sample: s exceeds s_max");

  Assignment truth(static_cast<std::size_t>(n));
  Rng sig = root.split("sigma");
  for (auto& v : truth) v = static_cast<int>(sig.below(static_cast<std::uint64_t>(q)));
  out.truth = truth;

  std::vector<long long> counts(d.degrees.begin(), d.degrees.end());
  detail::SocketTree sockets(counts);
  Rng layers = root.split("layers");
  Rng weights = root.split("weights");
  std::vector<long long> drawn(static_cast<std::size_t>(n), 0);
  std::vector<int> touched;

  for (long s = 1; s <= s_max; ++s) {
    Rng lr = layers.split(static_cast<std::uint64_t>(s));
    long kary = 0, unary_units = 0;
    if (s < point.s) {
      kary = lr.poisson(beta);
    } else if (s == point.s) {
      kary = lr.poisson(beta * point.t);
      unary_units = lr.poisson(beta * (1.0 - point.t));
    } else {
      unary_units = lr.poisson(beta);
    }
    touched.clear();
    // k-ary factors: neighborhoods from nu_s^(x)k, weights tilted at the truth
    for (long i = 0; i < kary; ++i) {
      if (sockets.total() <= 0) {
        out.skipped_factors += kary - i;
        break;
      }
      std::vector<int> nb;
      nb.reserve(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        const std::size_t x = sockets.draw(lr);
        if (drawn[x] == 0) touched.push_back(static_cast<int>(x));
        ++drawn[x];
        nb.push_back(static_cast<int>(x));
      }
      const std::size_t ti = detail::check_table_index(family, Check{nb, -1}, truth);
      const int choice = detail::sample_tilted_weight(family, ti, weights);
      out.graph.add_check(std::move(nb), out.graph.add_table(family.functions[static_cast<std::size_t>(choice)]));
      ++out.kary_checks;
    }
    // unary blocks: k factors per unit, neighbors from nu_s
    for (long i = 0; i < unary_units * k; ++i) {
      if (sockets.total() <= 0) {
        out.skipped_factors += unary_units * k - i;
        break;
      }
      const std::size_t x = sockets.draw(lr);
      if (drawn[x] == 0) touched.push_back(static_cast<int>(x));
      ++drawn[x];
      auto table = detail::sample_tilted_unary(family, point.pop,
                                               truth[x], weights);
      out.graph.add_check({static_cast<int>(x)}, out.graph.add_table(std::move(table)));
      ++out.unary_checks;
    }
    for (int x : touched) {
      const auto xi = static_cast<std::size_t>(x);
      const long long dec = std::min(sockets.count(xi), drawn[xi]);
      sockets.add(xi, -dec);
      drawn[xi] = 0;
    }
  }

  // pins IP3-IP4
  Rng pr = root.split("pins");
  out.theta = point.T * pr.unit();
  const double p = out.theta / static_cast<double>(n);
  for (int x = 0; x < n; ++x)
    if (pr.bernoulli(p)) out.graph.add_pin(x, truth[static_cast<std::size_t>(x)]);
  return out;
}

inline InterpolationSample interpolation_sample(int n, const DegreeDistribution& D, int k,
                                                const WeightFamily& family,
                                                const InterpolationPoint& point, double beta,
                                                std::uint64_t seed, double alpha = 0.0) {
  const auto part = sample_d_partition(n, D, Rng(seed).split("interp-dpart").next_u64());
  return interpolation_sample(part.d, k, family, point, beta, seed, alpha);
}

// log Z of a graph whose checks are all unary: the partition function
// factorizes over variables, so any n is fine.
inline double unary_forest_log_z(const FactorGraph& g) {
  const int n = g.n(), q = g.q();
  std::vector<std::vector<double>> site(static_cast<std::size_t>(n),
                                        std::vector<double>(static_cast<std::size_t>(q), 1.0));
  for (const auto& c : g.checks()) {
    if (c.neighbors.size() != 1)
      throw std::invalid_argument("unary_forest_log_z: graph has a non-unary check");
    const auto& t = g.weight_of(c).table();
    auto& s = site[static_cast<std::size_t>(c.neighbors[0])];
    for (int a = 0; a < q; ++a) s[static_cast<std::size_t>(a)] *= t[static_cast<std::size_t>(a)];
  }
  for (const auto& p : g.pins()) {
    auto& s = site[static_cast<std::size_t>(p.variable)];
    for (int a = 0; a < q; ++a)
      if (a != p.symbol) s[static_cast<std::size_t>(a)] = 0.0;
  }
  double logz = 0.0;
  for (const auto& s : site) {
    double z = 0.0;
    for (double v : s) z += v;
    if (!(z > 0.0)) throw std::domain_error("unary_forest_log_z: dead site");
    logz += std::log(z);
  }
  return logz;
}

}  // namespace fgmi
