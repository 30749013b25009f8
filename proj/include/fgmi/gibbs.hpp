#pragma once

// Exact Gibbs computations on small instances by full enumeration of
// Omega^n: partition function, marginals, entropy, joint-vs-product
// symmetry metrics. Everything works in nats.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgmi/graph.hpp"
#include "fgmi/rng.hpp"

namespace fgmi {

using Assignment = std::vector<int>;

struct EnumerationCapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::size_t state_count_checked(const FactorGraph& g, std::size_t cap_states) {
  std::size_t states = 1;
  for (int i = 0; i < g.n(); ++i) {
    if (states > cap_states / static_cast<std::size_t>(g.q()))
      throw EnumerationCapError("enumeration cap exceeded: q^n too large");
    states *= static_cast<std::size_t>(g.q());
  }
  return states;
}

inline int symbol_of(std::size_t state, int x, int n, int q) {
  // variable 0 is the most significant digit
  for (int i = n - 1; i > x; --i) state /= static_cast<std::size_t>(q);
  return static_cast<int>(state % static_cast<std::size_t>(q));
}

// psi_G(sigma) including pin indicators
inline double graph_weight(const FactorGraph& g, std::span<const int> sigma) {
  for (const auto& p : g.pins())
    if (sigma[static_cast<std::size_t>(p.variable)] != p.symbol) return 0.0;
  double w = 1.0;
  std::vector<int> local;
  for (const auto& c : g.checks()) {
    local.clear();
    for (int x : c.neighbors) local.push_back(sigma[static_cast<std::size_t>(x)]);
    w *= g.weight_of(c)(local);
  }
  return w;
}

// dense weight vector over all q^n states
inline std::vector<double> weight_vector(const FactorGraph& g, std::size_t cap_states) {
  const std::size_t states = state_count_checked(g, cap_states);
  const int n = g.n(), q = g.q();
  std::vector<double> w(states, 1.0);
  std::vector<int> sigma(static_cast<std::size_t>(n), 0);
  std::vector<int> local;
  for (std::size_t idx = 0; idx < states; ++idx) {
    double v = 1.0;
    for (const auto& p : g.pins())
      if (sigma[static_cast<std::size_t>(p.variable)] != p.symbol) {
        v = 0.0;
        break;
      }
    if (v > 0.0) {
      for (const auto& c : g.checks()) {
        local.clear();
        for (int x : c.neighbors) local.push_back(sigma[static_cast<std::size_t>(x)]);
        v *= g.weight_of(c)(local);
        if (v == 0.0) break;
      }
    }
    w[idx] = v;
    // odometer increment, last variable fastest
    for (int x = n - 1; x >= 0; --x) {
      if (++sigma[static_cast<std::size_t>(x)] < q) break;
      sigma[static_cast<std::size_t>(x)] = 0;
    }
  }
  return w;
}

}  // namespace detail

inline constexpr std::size_t kDefaultStateCap = std::size_t{1} << 22;  // n=22 at q=2

struct PartitionResult {
  double z = 0.0;
  double log_z = 0.0;
};

// Z(G) = sum_sigma psi_G(sigma), exact.
inline PartitionResult partition_function(const FactorGraph& g,
                                          std::size_t cap_states = kDefaultStateCap) {
  const auto w = detail::weight_vector(g, cap_states);
  double z = 0.0;
  for (double v : w) z += v;
  if (!(z > 0.0)) throw std::domain_error("partition_function: Z is zero");
  return {z, std::log(z)};
}

struct GibbsSummary {
  double log_z = 0.0;
  std::vector<std::vector<double>> marginals;  // [variable][symbol]
  double entropy = 0.0;                        // nats
};

inline GibbsSummary gibbs_marginals(const FactorGraph& g,
                                    std::size_t cap_states = kDefaultStateCap) {
  const auto w = detail::weight_vector(g, cap_states);
  const int n = g.n(), q = g.q();
  GibbsSummary out;
  out.marginals.assign(static_cast<std::size_t>(n),
                       std::vector<double>(static_cast<std::size_t>(q), 0.0));
  double z = 0.0, wlogw = 0.0;
  std::vector<int> sigma(static_cast<std::size_t>(n), 0);
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    const double v = w[idx];
    if (v > 0.0) {
      z += v;
      wlogw += v * std::log(v);
      for (int x = 0; x < n; ++x)
        out.marginals[static_cast<std::size_t>(x)][static_cast<std::size_t>(sigma[static_cast<std::size_t>(x)])] += v;
    }
    for (int x = n - 1; x >= 0; --x) {
      if (++sigma[static_cast<std::size_t>(x)] < q) break;
      sigma[static_cast<std::size_t>(x)] = 0;
    }
  }
  if (!(z > 0.0)) throw std::domain_error("gibbs_marginals: Z is zero");
  out.log_z = std::log(z);
  out.entropy = out.log_z - wlogw / z;
  for (auto& m : out.marginals)
    for (double& v : m) v /= z;
  return out;
}

// <X(Sigma)>_G = sum_sigma mu_G(sigma) X(sigma)
inline double gibbs_expectation(const FactorGraph& g,
                                const std::function<double(std::span<const int>)>& f,
                                std::size_t cap_states = kDefaultStateCap) {
  detail::state_count_checked(g, cap_states);
  const int n = g.n(), q = g.q();
  std::vector<int> sigma(static_cast<std::size_t>(n), 0);
  double z = 0.0, acc = 0.0;
  const std::size_t states = detail::state_count_checked(g, cap_states);
  for (std::size_t idx = 0; idx < states; ++idx) {
    const double v = detail::graph_weight(g, sigma);
    if (v > 0.0) {
      z += v;
      acc += v * f(sigma);
    }
    for (int x = n - 1; x >= 0; --x) {
      if (++sigma[static_cast<std::size_t>(x)] < q) break;
      sigma[static_cast<std::size_t>(x)] = 0;
    }
  }
  if (!(z > 0.0)) throw std::domain_error("gibbs_expectation: Z is zero");
  return acc / z;
}

struct SymmetryOptions {
  bool exact = true;           // average over all n^ell ordered tuples
  std::size_t tuple_samples = 0;  // used when exact = false
  std::uint64_t seed = 0;
  std::size_t cap_states = kDefaultStateCap;
};

// (delta,ell)-symmetry statistic: average TV between joint ell-marginals and
// the product of single-variable marginals over ordered tuples, repeated
// indices included.
inline double symmetry_metric(const FactorGraph& g, int ell,
                              const SymmetryOptions& opts = {}) {
  if (ell < 2) throw std::invalid_argument("symmetry_metric: ell must be >= 2");
  const auto w = detail::weight_vector(g, opts.cap_states);
  const int n = g.n(), q = g.q();
  double z = 0.0;
  for (double v : w) z += v;
  if (!(z > 0.0)) throw std::domain_error("symmetry_metric: Z is zero");

  // single-variable marginals
  std::vector<std::vector<double>> single(
      static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(q), 0.0));
  for (std::size_t idx = 0; idx < w.size(); ++idx) {
    if (w[idx] <= 0.0) continue;
    for (int x = 0; x < n; ++x)
      single[static_cast<std::size_t>(x)]
            [static_cast<std::size_t>(detail::symbol_of(idx, x, n, q))] += w[idx];
  }
  for (auto& m : single)
    for (double& v : m) v /= z;

  std::size_t joint_size = 1;
  for (int i = 0; i < ell; ++i) joint_size *= static_cast<std::size_t>(q);
  std::vector<double> joint(joint_size);
  std::vector<int> tuple(static_cast<std::size_t>(ell), 0);

  const auto tuple_tv = [&](const std::vector<int>& xs) {
    std::fill(joint.begin(), joint.end(), 0.0);
    for (std::size_t idx = 0; idx < w.size(); ++idx) {
      if (w[idx] <= 0.0) continue;
      std::size_t j = 0;
      for (int x : xs)
        j = j * static_cast<std::size_t>(q) +
            static_cast<std::size_t>(detail::symbol_of(idx, x, n, q));
      joint[j] += w[idx];
    }
    double tv = 0.0;
    for (std::size_t j = 0; j < joint_size; ++j) {
      double prod = 1.0;
      std::size_t rest = j;
      for (int i = ell - 1; i >= 0; --i) {
        prod *= single[static_cast<std::size_t>(xs[static_cast<std::size_t>(i)])]
                      [rest % static_cast<std::size_t>(q)];
        rest /= static_cast<std::size_t>(q);
      }
      tv += std::fabs(joint[j] / z - prod);
    }
    return tv / 2.0;
  };

  if (opts.exact) {
    double acc = 0.0;
    std::size_t tuples = 1;
    for (int i = 0; i < ell; ++i) tuples *= static_cast<std::size_t>(n);
    std::vector<int> xs(static_cast<std::size_t>(ell), 0);
    for (std::size_t t = 0; t < tuples; ++t) {
      acc += tuple_tv(xs);
      for (int i = ell - 1; i >= 0; --i) {
        if (++xs[static_cast<std::size_t>(i)] < n) break;
        xs[static_cast<std::size_t>(i)] = 0;
      }
    }
    return acc / static_cast<double>(tuples);
  }

  if (opts.tuple_samples == 0)
    throw std::invalid_argument("symmetry_metric: tuple_samples must be positive");
  Rng rng = Rng(opts.seed).split("symmetry-tuples");
  double acc = 0.0;
  std::vector<int> xs(static_cast<std::size_t>(ell), 0);
  for (std::size_t t = 0; t < opts.tuple_samples; ++t) {
    for (auto& x : xs) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    acc += tuple_tv(xs);
  }
  return acc / static_cast<double>(opts.tuple_samples);
}

// Exact draw from mu_G by inversion over the enumerated weights.
inline Assignment sample_from_gibbs(const FactorGraph& g, Rng& rng,
                                    std::size_t cap_states = kDefaultStateCap) {
  const auto w = detail::weight_vector(g, cap_states);
  double z = 0.0;
  for (double v : w) z += v;
  if (!(z > 0.0)) throw std::domain_error("sample_from_gibbs: Z is zero");
  double u = rng.unit() * z;
  std::size_t idx = 0;
  for (; idx + 1 < w.size(); ++idx) {
    u -= w[idx];
    if (u < 0.0) break;
  }
  Assignment sigma(static_cast<std::size_t>(g.n()));
  for (int x = g.n() - 1; x >= 0; --x) {
    sigma[static_cast<std::size_t>(x)] = static_cast<int>(idx % static_cast<std::size_t>(g.q()));
    idx /= static_cast<std::size_t>(g.q());
  }
  return sigma;
}

// Single-site Metropolis estimator for instances beyond the enumeration cap.
// Estimates only; carries no exactness contract and is kept out of the
// acceptance path.
class ApproximateGibbs {
 public:
  ApproximateGibbs(const FactorGraph& g, std::uint64_t seed)
      : g_(g), rng_(Rng(seed).split("metropolis")) {
    var_checks_.resize(static_cast<std::size_t>(g.n()));
    for (std::size_t ci = 0; ci < g.checks().size(); ++ci)
      for (int x : g.checks()[ci].neighbors)
        var_checks_[static_cast<std::size_t>(x)].push_back(ci);
    state_.assign(static_cast<std::size_t>(g.n()), 0);
    for (const auto& p : g.pins()) state_[static_cast<std::size_t>(p.variable)] = p.symbol;
    pinned_.assign(static_cast<std::size_t>(g.n()), false);
    for (const auto& p : g.pins()) pinned_[static_cast<std::size_t>(p.variable)] = true;
  }

  std::vector<std::vector<double>> estimate_marginals(std::size_t sweeps,
                                                      std::size_t burn_in) {
    std::vector<std::vector<double>> counts(
        static_cast<std::size_t>(g_.n()),
        std::vector<double>(static_cast<std::size_t>(g_.q()), 0.0));
    for (std::size_t s = 0; s < burn_in; ++s) sweep();
    for (std::size_t s = 0; s < sweeps; ++s) {
      sweep();
      for (int x = 0; x < g_.n(); ++x)
        counts[static_cast<std::size_t>(x)]
              [static_cast<std::size_t>(state_[static_cast<std::size_t>(x)])] += 1.0;
    }
    for (auto& m : counts)
      for (double& v : m) v /= static_cast<double>(sweeps);
    return counts;
  }

 private:
  double local_weight(int x) const {
    double w = 1.0;
    std::vector<int> local;
    for (std::size_t ci : var_checks_[static_cast<std::size_t>(x)]) {
      const auto& c = g_.checks()[ci];
      local.clear();
      for (int y : c.neighbors) local.push_back(state_[static_cast<std::size_t>(y)]);
      w *= g_.weight_of(c)(local);
    }
    return w;
  }

  void sweep() {
    for (int x = 0; x < g_.n(); ++x) {
      if (pinned_[static_cast<std::size_t>(x)]) continue;
      const int old = state_[static_cast<std::size_t>(x)];
      const double w_old = local_weight(x);
      int prop = static_cast<int>(rng_.below(static_cast<std::uint64_t>(g_.q() - 1)));
      if (prop >= old) ++prop;
      state_[static_cast<std::size_t>(x)] = prop;
      const double w_new = local_weight(x);
      if (w_old <= 0.0) continue;  // keep the move out of a dead state
      if (w_new < w_old && rng_.unit() * w_old >= w_new)
        state_[static_cast<std::size_t>(x)] = old;
    }
  }

  const FactorGraph& g_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> var_checks_;
  std::vector<int> state_;
  std::vector<bool> pinned_;
};

}  // namespace fgmi
