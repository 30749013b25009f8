#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fgmi/rng.hpp"

namespace fgmi {

// Finite-support variable degree distribution D.
class DegreeDistribution {
 public:
  explicit DegreeDistribution(std::map<int, double> mass) : mass_(std::move(mass)) {
    double s = 0.0;
    for (auto& [deg, p] : mass_) {
      if (deg < 0) throw std::invalid_argument("DegreeDistribution: negative degree");
      if (p < 0.0) throw std::invalid_argument("DegreeDistribution: negative mass");
      s += p;
      mean_ += deg * p;
    }
    if (mass_.empty() || std::fabs(s - 1.0) > 1e-9)
      throw std::invalid_argument("DegreeDistribution: probabilities must sum to 1");
  }

  static DegreeDistribution point_mass(int degree) {
    return DegreeDistribution({{degree, 1.0}});
  }

  const std::map<int, double>& mass() const { return mass_; }
  double mean() const { return mean_; }
  int max_degree() const { return mass_.rbegin()->first; }
  double probability(int degree) const {
    auto it = mass_.find(degree);
    return it == mass_.end() ? 0.0 : it->second;
  }

  int sample(Rng& rng) const {
    double u = rng.unit();
    for (auto& [deg, p] : mass_) {
      u -= p;
      if (u < 0.0) return deg;
    }
    return mass_.rbegin()->first;
  }

  // size-biased residual law: gamma_hat = l-1 with probability l*D(l)/E[D]
  DegreeDistribution size_biased_residual() const {
    if (mean_ <= 0.0)
      throw std::invalid_argument("DegreeDistribution: residual undefined for E[D]=0");
    std::map<int, double> out;
    for (auto& [deg, p] : mass_)
      if (deg >= 1 && p > 0.0) out[deg - 1] += deg * p / mean_;
    return DegreeDistribution(std::move(out));
  }

 private:
  std::map<int, double> mass_;
  double mean_ = 0.0;
};

// Degree sequence d over variables [0,n).
struct DegreeSequence {
  std::vector<int> degrees;

  int n() const { return static_cast<int>(degrees.size()); }
  long long total() const {
    return std::accumulate(degrees.begin(), degrees.end(), 0LL);
  }
  int max_degree() const {
    return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
  }
};

struct DPartitionResult {
  DegreeSequence d;
  bool rounded = false;  // set when n*D(l) were not all integral
};

// Uniformly random D-partition of [n]: class sizes |V_l| = n D(l), made
// integral by largest-remainder rounding when needed.
inline DPartitionResult sample_d_partition(int n, const DegreeDistribution& D,
                                           std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample_d_partition: n must be positive");
  struct Cls {
    int degree;
    long long count;
    double frac;
  };
  std::vector<Cls> classes;
  long long assigned = 0;
  bool rounded = false;
  for (auto& [deg, p] : D.mass()) {
    const double exact = p * n;
    const double fl = std::floor(exact + 1e-12);
    Cls c{deg, static_cast<long long>(fl), exact - fl};
    if (c.frac > 1e-12) rounded = true;
    assigned += c.count;
    classes.push_back(c);
  }
  // hand out the remainder by descending fractional part, smaller degree first on ties
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return classes[a].frac > classes[b].frac;
  });
  long long leftover = n - assigned;
  for (std::size_t i = 0; leftover > 0 && i < order.size(); ++i) {
    ++classes[order[i]].count;
    --leftover;
  }
  if (leftover != 0) throw std::logic_error("sample_d_partition: rounding failed");

  std::vector<int> degrees;
  degrees.reserve(static_cast<std::size_t>(n));
  for (const auto& c : classes)
    for (long long i = 0; i < c.count; ++i) degrees.push_back(c.degree);

  // uniform assignment of the degree multiset to vertices (Fisher-Yates)
  Rng rng = Rng(seed).split("d-partition");
  for (std::size_t i = degrees.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(degrees[i - 1], degrees[j]);
  }
  return {DegreeSequence{std::move(degrees)}, rounded};
}

// Socket bookkeeping of the layered construction: remaining sockets per
// variable and the layer index.
struct SocketState {
  std::vector<long long> remaining;
  int layer = 1;

  long long total() const {
    return std::accumulate(remaining.begin(), remaining.end(), 0LL);
  }
  // nu_s(x) = delta_s(x) / sum_y delta_s(y)
  std::vector<double> measure() const {
    const long long tot = total();
    if (tot <= 0) throw std::invalid_argument("SocketState: empty socket pool");
    std::vector<double> nu(remaining.size());
    for (std::size_t i = 0; i < remaining.size(); ++i)
      nu[i] = static_cast<double>(remaining[i]) / static_cast<double>(tot);
    return nu;
  }
};

// Approximation-step plan of the (alpha,beta) scheme.
struct LayerPlan {
  std::vector<long> counts;
  double alpha = 0.0;
  double beta = 0.0;
  long s_max = 0;

  long long total_checks() const {
    return std::accumulate(counts.begin(), counts.end(), 0LL);
  }
};

// s_max = floor((1-alpha) beta^-1 k^-1 sum_x d(x)); counts are iid Po(beta).
inline LayerPlan alpha_beta_plan(const DegreeSequence& d, int k, double alpha,
                                 double beta, std::uint64_t seed) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must be in [0,1)");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (k < 1) throw std::invalid_argument("k must be positive");
  LayerPlan plan;
  plan.alpha = alpha;
  plan.beta = beta;
  plan.s_max = static_cast<long>(std::floor(
      (1.0 - alpha) / beta / static_cast<double>(k) * static_cast<double>(d.total())));
  plan.counts.resize(static_cast<std::size_t>(std::max(plan.s_max, 0L)));
  Rng rng = Rng(seed).split("layer-plan");
  for (auto& m : plan.counts) m = rng.poisson(beta);
  return plan;
}

// TV(nu, nu') with nu ~ delta and nu' ~ (delta - c)_+, evaluated as the sum
// of positive parts.
inline double tv_shift_distance(const std::vector<long long>& delta,
                                const std::vector<long long>& c) {
  if (delta.size() != c.size())
    throw std::invalid_argument("tv_shift_distance: size mismatch");
  long long sum = 0, sum_shift = 0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    if (delta[i] < 0) throw std::invalid_argument("tv_shift_distance: negative delta");
    sum += delta[i];
    sum_shift += std::max(delta[i] - c[i], 0LL);
  }
  if (sum <= 0 || sum_shift <= 0)
    throw std::invalid_argument("tv_shift_distance: degenerate socket counts");
  double tv = 0.0;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    const double nu = static_cast<double>(delta[i]) / static_cast<double>(sum);
    const double nu_shift =
        static_cast<double>(std::max(delta[i] - c[i], 0LL)) / static_cast<double>(sum_shift);
    tv += std::max(nu - nu_shift, 0.0);
  }
  return tv;
}

}  // namespace fgmi
