#pragma once

// Population representation of distributions over measures on Omega, the
// Bethe-type functionals evaluated by Monte Carlo, the distributional
// fixed-point iteration, and the multi-start search for the supremum.
//
// The per-sample randomness is split by labeled streams so that algebraically
// related quantities (the cluster term, the edge term, the forest closed
// form) can be evaluated on literally the same draws: with one seed,
// cluster_term = closed_form_forest and functional = cluster - coef * edge
// hold sample by sample.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgmi/degree.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/stats.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

// Lambda(x) = x ln x, Lambda(0) = 0
inline double big_lambda(double x) {
  if (x < 0.0) throw std::invalid_argument("big_lambda: negative argument");
  return x > 0.0 ? x * std::log(x) : 0.0;
}

// Finite population of probability measures on Omega, stored row-major N x q.
class Population {
 public:
  Population(int q, std::vector<double> flat) : q_(q), data_(std::move(flat)) {
    if (q < 2 || data_.empty() || data_.size() % static_cast<std::size_t>(q) != 0)
      throw std::invalid_argument("Population: bad shape");
    for (std::size_t i = 0; i < size(); ++i) {
      double s = 0.0;
      for (int a = 0; a < q; ++a) {
        const double v = member(i)[static_cast<std::size_t>(a)];
        if (!(v >= -1e-12)) throw std::invalid_argument("Population: negative mass");
        s += v;
      }
      if (std::fabs(s - 1.0) > 1e-9)
        throw std::invalid_argument("Population: member does not sum to 1");
    }
  }

  static Population delta_uniform(int q, std::size_t n) {
    return Population(q, std::vector<double>(n * static_cast<std::size_t>(q),
                                             1.0 / static_cast<double>(q)));
  }

  int q() const { return q_; }
  std::size_t size() const { return data_.size() / static_cast<std::size_t>(q_); }
  std::span<const double> member(std::size_t i) const {
    return {data_.data() + i * static_cast<std::size_t>(q_), static_cast<std::size_t>(q_)};
  }

  std::vector<double> mean_measure() const {
    std::vector<double> m(static_cast<std::size_t>(q_), 0.0);
    for (std::size_t i = 0; i < size(); ++i)
      for (int a = 0; a < q_; ++a)
        m[static_cast<std::size_t>(a)] += member(i)[static_cast<std::size_t>(a)];
    for (double& v : m) v /= static_cast<double>(size());
    return m;
  }

  double mean_tv_from_uniform() const {
    const auto m = mean_measure();
    double tv = 0.0;
    for (double v : m) tv += std::fabs(v - 1.0 / static_cast<double>(q_));
    return tv / 2.0;
  }

  // the P^2_*(Omega) membership check
  void validate_mean_uniform(double tol = 1e-3) const {
    if (mean_tv_from_uniform() > tol)
      throw std::invalid_argument("Population: mean measure is not uniform");
  }

 private:
  int q_;
  std::vector<double> data_;
};

// Code specialization: measures on {+1,-1} stored as theta with
// mu(+1) = (1+theta)/2, mu(-1) = (1-theta)/2.
class ThetaPopulation {
 public:
  explicit ThetaPopulation(std::vector<double> theta) : theta_(std::move(theta)) {
    if (theta_.empty()) throw std::invalid_argument("ThetaPopulation: empty");
    for (double t : theta_)
      if (!(t >= -1.0 && t <= 1.0))
        throw std::invalid_argument("ThetaPopulation: theta outside [-1,1]");
  }

  static ThetaPopulation delta_zero(std::size_t n) {
    return ThetaPopulation(std::vector<double>(n, 0.0));
  }

  // N members made of (value, -value) pairs; exactly mean zero
  static ThetaPopulation symmetric_pairs(const std::vector<double>& half) {
    std::vector<double> full;
    full.reserve(half.size() * 2);
    for (double t : half) {
      full.push_back(t);
      full.push_back(-t);
    }
    return ThetaPopulation(std::move(full));
  }

  std::size_t size() const { return theta_.size(); }
  const std::vector<double>& values() const { return theta_; }
  double at(std::size_t i) const { return theta_[i]; }

  double mean() const {
    double s = 0.0;
    for (double t : theta_) s += t;
    return s / static_cast<double>(theta_.size());
  }

  void validate_mean_zero(double tol = 1e-3) const {
    if (std::fabs(mean()) > tol)
      throw std::invalid_argument("ThetaPopulation: mean is not zero");
  }

  // duplicate each theta as +-theta with half weight
  ThetaPopulation symmetrized() const {
    std::vector<double> full;
    full.reserve(theta_.size() * 2);
    for (double t : theta_) {
      full.push_back(t);
      full.push_back(-t);
    }
    return ThetaPopulation(std::move(full));
  }

  Population to_population() const {
    std::vector<double> flat;
    flat.reserve(theta_.size() * 2);
    for (double t : theta_) {
      flat.push_back((1.0 + t) / 2.0);
      flat.push_back((1.0 - t) / 2.0);
    }
    return Population(2, std::move(flat));
  }

  // mean |sorted difference|, the convergence metric between iterates
  static double sorted_w1(const ThetaPopulation& a, const ThetaPopulation& b) {
    if (a.size() != b.size())
      throw std::invalid_argument("sorted_w1: size mismatch");
    std::vector<double> x = a.theta_, y = b.theta_;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }

 private:
  std::vector<double> theta_;
};

struct MonteCarloValue {
  double value = 0.0;
  double stderr = 0.0;
  std::size_t samples = 0;
};

namespace detail {

inline std::size_t sample_prior_index(const WeightFamily& fam, Rng& rng) {
  double u = rng.unit();
  for (std::size_t i = 0; i < fam.prior.size(); ++i) {
    u -= fam.prior[i];
    if (u < 0.0) return i;
  }
  return fam.prior.size() - 1;
}

// message m(sigma) = sum_{tau: tau_h = sigma} psi(tau) prod_{j != h} mu_j(tau_j)
inline void check_message(const WeightFunction& psi, int h,
                          const std::vector<std::span<const double>>& mu,
                          std::vector<double>& out) {
  const int q = psi.q();
  const int k = psi.arity();
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t states = psi.table().size();
  std::vector<int> digits(static_cast<std::size_t>(k), 0);
  for (std::size_t idx = 0; idx < states; ++idx) {
    double w = psi.at_index(idx);
    if (w != 0.0) {
      for (int j = 0; j < k; ++j)
        if (j != h) w *= mu[static_cast<std::size_t>(j)][static_cast<std::size_t>(digits[static_cast<std::size_t>(j)])];
      out[static_cast<std::size_t>(digits[static_cast<std::size_t>(h)])] += w;
    }
    for (int j = k - 1; j >= 0; --j) {
      if (++digits[static_cast<std::size_t>(j)] < q) break;
      digits[static_cast<std::size_t>(j)] = 0;
    }
  }
}

// edge value sum_tau psi(tau) prod_j mu_j(tau_j)
inline double edge_value(const WeightFunction& psi,
                         const std::vector<std::span<const double>>& mu) {
  const int q = psi.q();
  const int k = psi.arity();
  double total = 0.0;
  std::vector<int> digits(static_cast<std::size_t>(k), 0);
  for (std::size_t idx = 0; idx < psi.table().size(); ++idx) {
    double w = psi.at_index(idx);
    if (w != 0.0) {
      for (int j = 0; j < k; ++j)
        w *= mu[static_cast<std::size_t>(j)][static_cast<std::size_t>(digits[static_cast<std::size_t>(j)])];
      total += w;
    }
    for (int j = k - 1; j >= 0; --j) {
      if (++digits[static_cast<std::size_t>(j)] < q) break;
      digits[static_cast<std::size_t>(j)] = 0;
    }
  }
  return total;
}

// one sample of the cluster statistic
// |Omega|^-1 xi^-gamma Lambda(sum_sigma prod_i m_i(sigma))
inline double cluster_sample(const DegreeDistribution& D, const WeightFamily& fam,
                             const Population& pop, Rng rs) {
  const int q = fam.alphabet.size();
  const int k = fam.arity();
  const int gamma = D.sample(rs);
  std::vector<double> prod(static_cast<std::size_t>(q), 1.0);
  std::vector<double> msg(static_cast<std::size_t>(q), 0.0);
  std::vector<std::span<const double>> mu(static_cast<std::size_t>(k));
  for (int i = 0; i < gamma; ++i) {
    const std::size_t fi = sample_prior_index(fam, rs);
    const int h = static_cast<int>(rs.below(static_cast<std::uint64_t>(k)));
    for (int j = 0; j < k; ++j)
      if (j != h) mu[static_cast<std::size_t>(j)] = pop.member(rs.below(pop.size()));
    check_message(fam.functions[fi], h, mu, msg);
    for (int a = 0; a < q; ++a)
      prod[static_cast<std::size_t>(a)] *= msg[static_cast<std::size_t>(a)];
  }
  double total = 0.0;
  for (double v : prod) total += v;
  return std::pow(fam.xi, -gamma) * big_lambda(total) / static_cast<double>(q);
}

// one sample of the edge statistic Lambda(sum_tau psi prod mu)
inline double edge_sample(const WeightFamily& fam, const Population& pop, Rng rs) {
  const int k = fam.arity();
  const std::size_t fi = sample_prior_index(fam, rs);
  std::vector<std::span<const double>> mu(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) mu[static_cast<std::size_t>(j)] = pop.member(rs.below(pop.size()));
  return big_lambda(edge_value(fam.functions[fi], mu));
}

}  // namespace detail

// B(D, pi): cluster term minus ((k-1)/(k xi)) E[gamma] times the edge term.
inline MonteCarloValue b_functional(const DegreeDistribution& D, const WeightFamily& family,
                                    const Population& pop, std::size_t mc_samples,
                                    std::uint64_t seed) {
  pop.validate_mean_uniform();
  if (pop.q() != family.alphabet.size())
    throw std::invalid_argument("b_functional: alphabet mismatch");
  const double coef = (family.arity() - 1.0) / (family.arity() * family.xi) * D.mean();
  Rng root(seed);
  Rng cluster = root.split("cluster");
  Rng edge = root.split("edge");
  Accumulator acc;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const double t1 = detail::cluster_sample(D, family, pop, cluster.split(s));
    const double t2 = detail::edge_sample(family, pop, edge.split(s));
    acc.add(t1 - coef * t2);
  }
  return {acc.mean, acc.stderr_mean(), mc_samples};
}

// First term of B alone: the free energy of the unary forest endpoint.
inline MonteCarloValue closed_form_forest(const DegreeDistribution& D,
                                          const WeightFamily& family, const Population& pop,
                                          std::size_t mc_samples, std::uint64_t seed) {
  if (pop.q() != family.alphabet.size())
    throw std::invalid_argument("closed_form_forest: alphabet mismatch");
  Rng cluster = Rng(seed).split("cluster");
  Accumulator acc;
  for (std::size_t s = 0; s < mc_samples; ++s)
    acc.add(detail::cluster_sample(D, family, pop, cluster.split(s)));
  return {acc.mean, acc.stderr_mean(), mc_samples};
}

// Gamma_{s,t} = (s+t-1) beta (k-1) / xi * E[Lambda(sum_tau psi prod mu)]
inline MonteCarloValue gamma_correction(long s, double t, double beta,
                                        const WeightFamily& family, const Population& pop,
                                        std::size_t mc_samples, std::uint64_t seed) {
  if (s < 1) throw std::invalid_argument("gamma_correction: s must be >= 1");
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("gamma_correction: t in [0,1]");
  const double pref =
      (static_cast<double>(s) + t - 1.0) * beta * (family.arity() - 1.0) / family.xi;
  Rng edge = Rng(seed).split("edge");
  Accumulator acc;
  for (std::size_t i = 0; i < mc_samples; ++i)
    acc.add(detail::edge_sample(family, pop, edge.split(i)));
  return {pref * acc.mean, std::fabs(pref) * acc.stderr_mean(), mc_samples};
}

// ---- code-form evaluators over theta populations ----
// The code family reduces every message to 1 + v sigma with a scalar v:
// v = s c prod theta for the B form (s uniform, c = 1-2 eta), and
// v = J prod theta for the L form (J the eta-biased channel sign).

enum class CodeFunctional { b_form, l_form };

namespace detail {

inline double code_sign_factor(CodeFunctional f, double eta, Rng& rs) {
  if (f == CodeFunctional::b_form) {
    // family index 0 = psi_{+1}; matches sample_prior_index on uniform prior
    const int s = rs.unit() < 0.5 ? +1 : -1;
    return s * (1.0 - 2.0 * eta);
  }
  return static_cast<double>(rs.channel_sign(eta));
}

inline double code_cluster_sample(const DegreeDistribution& D, int k, double eta,
                                  CodeFunctional f, const ThetaPopulation& pop, Rng rs) {
  const int gamma = D.sample(rs);
  double plus = 1.0, minus = 1.0;
  for (int i = 0; i < gamma; ++i) {
    const double sf = code_sign_factor(f, eta, rs);
    if (f == CodeFunctional::b_form) (void)rs.below(static_cast<std::uint64_t>(k));  // slot, unused
    double v = sf;
    for (int j = 0; j + 1 < k; ++j) v *= pop.at(rs.below(pop.size()));
    plus *= 1.0 + v;
    minus *= 1.0 - v;
  }
  return big_lambda(plus + minus) / 2.0;
}

inline double code_edge_sample(int k, double eta, CodeFunctional f,
                               const ThetaPopulation& pop, Rng rs) {
  const double sf = code_sign_factor(f, eta, rs);
  double v = sf;
  for (int j = 0; j < k; ++j) v *= pop.at(rs.below(pop.size()));
  return big_lambda(1.0 + v);
}

}  // namespace detail

struct FunctionalValue {
  double value = 0.0;
  double stderr = 0.0;
  double cluster_mean = 0.0;
  double edge_mean = 0.0;
  std::size_t samples = 0;
};

// L(k,D,eta) in the l_form, and B(D,.) specialized to codes in the b_form.
inline FunctionalValue code_functional(const DegreeDistribution& D, int k, double eta,
                                       CodeFunctional f, const ThetaPopulation& pop,
                                       std::size_t mc_samples, std::uint64_t seed) {
  pop.validate_mean_zero();
  const double coef = (k - 1.0) / static_cast<double>(k) * D.mean();
  Rng root(seed);
  Rng cluster = root.split("cluster");
  Rng edge = root.split("edge");
  Accumulator acc, acc1, acc2;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const double t1 = detail::code_cluster_sample(D, k, eta, f, pop, cluster.split(s));
    const double t2 = detail::code_edge_sample(k, eta, f, pop, edge.split(s));
    acc.add(t1 - coef * t2);
    acc1.add(t1);
    acc2.add(t2);
  }
  return {acc.mean, acc.stderr_mean(), acc1.mean, acc2.mean, mc_samples};
}

inline FunctionalValue l_functional(int k, const DegreeDistribution& D, double eta,
                                    const ThetaPopulation& pop, std::size_t mc_samples,
                                    std::uint64_t seed) {
  return code_functional(D, k, eta, CodeFunctional::l_form, pop, mc_samples, seed);
}

inline FunctionalValue b_functional_code(const DegreeDistribution& D, int k, double eta,
                                         const ThetaPopulation& pop,
                                         std::size_t mc_samples, std::uint64_t seed) {
  return code_functional(D, k, eta, CodeFunctional::b_form, pop, mc_samples, seed);
}

// ---- population dynamics ----

struct PdStepResult {
  ThetaPopulation pop;
  bool degenerate = false;  // E[gamma] = 0, no recursion possible
};

// theta' = tanh(sum_{a<=gamma_hat} artanh(J_a prod_{j<k-1} theta_{a,j})) with
// gamma_hat from the size-biased residual law; output emitted as +-pairs so
// the empirical mean is exactly zero.
inline PdStepResult pd_step(const ThetaPopulation& pop, int k, const DegreeDistribution& D,
                            double eta, std::uint64_t seed, double damping = 0.0) {
  if (pop.size() % 2 != 0)
    throw std::invalid_argument("pd_step: population size must be even");
  if (!(damping >= 0.0 && damping < 1.0))
    throw std::invalid_argument("pd_step: damping must be in [0,1)");
  if (D.mean() <= 0.0) return {pop, true};
  const DegreeDistribution resid = D.size_biased_residual();
  const std::size_t n = pop.size();
  std::size_t retained_pairs = static_cast<std::size_t>(damping * static_cast<double>(n) / 2.0);
  if (retained_pairs * 2 > n) retained_pairs = n / 2;
  const std::size_t fresh_pairs = n / 2 - retained_pairs;

  constexpr double clip = 1.0 - 1e-12;
  Rng root = Rng(seed).split("pd-step");
  std::vector<double> half;
  half.reserve(n / 2);
  for (std::size_t i = 0; i < fresh_pairs; ++i) {
    Rng rs = root.split("fresh", i);
    const int gh = resid.sample(rs);
    double field = 0.0;
    for (int a = 0; a < gh; ++a) {
      double v = static_cast<double>(rs.channel_sign(eta));
      for (int j = 0; j + 1 < k; ++j) v *= pop.at(rs.below(pop.size()));
      v = std::clamp(v, -clip, clip);
      field += std::atanh(v);
    }
    half.push_back(std::tanh(field));
  }
  Rng keep = root.split("retain");
  for (std::size_t i = 0; i < retained_pairs; ++i)
    half.push_back(pop.at(keep.below(pop.size())));
  return {ThetaPopulation::symmetric_pairs(half), false};
}

// ---- sup search ----

struct SolverSettings {
  std::size_t population_size = 10000;  // even; >= 1000 for acceptance runs
  int iterations = 300;
  double damping = 0.0;
  int restarts = 2;
  double tolerance = 5e-3;   // W1 between successive sorted populations
  int consecutive = 10;
  std::size_t mc_samples = 100000;

  void validate() const {
    if (population_size < 2 || population_size % 2 != 0)
      throw std::invalid_argument("SolverSettings: population size must be even and >= 2");
    if (!(tolerance > 0.0)) throw std::invalid_argument("SolverSettings: tolerance must be > 0");
    if (iterations < 1 || restarts < 1)
      throw std::invalid_argument("SolverSettings: iterations/restarts must be >= 1");
  }
};

struct RestartDiagnostics {
  std::string candidate;  // mesh seed name
  int restart = -1;       // -1 = direct evaluation of the mesh seed
  bool converged = true;
  int iterations = 0;
  double value = 0.0;
  double stderr = 0.0;
  std::vector<double> trajectory;  // coarse functional values along the run
};

struct SupResult {
  double value = 0.0;
  double stderr = 0.0;
  ThetaPopulation argmax{std::vector<double>{0.0}};
  std::string best_candidate;
  std::vector<RestartDiagnostics> diagnostics;
};

inline std::vector<std::pair<std::string, ThetaPopulation>> solver_mesh(
    std::size_t population_size) {
  const std::size_t half = population_size / 2;
  std::vector<double> frozen(half, 1.0 - 1e-12);
  std::vector<double> spread(half);
  for (std::size_t i = 0; i < half; ++i)
    spread[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(half);
  return {
      {"delta0", ThetaPopulation::delta_zero(population_size)},
      {"frozen", ThetaPopulation::symmetric_pairs(frozen)},
      {"spread", ThetaPopulation::symmetric_pairs(spread)},
  };
}

// Multi-start search: iterate pd_step from every mesh seed, evaluate the
// functional at each fixed point and at every mesh seed directly, return the
// best. The result is >= the delta_0 value up to Monte Carlo error since
// delta_0 is always in the mesh.
inline SupResult solve_sup_code(int k, const DegreeDistribution& D, double eta,
                                CodeFunctional f, const SolverSettings& settings,
                                std::uint64_t seed) {
  settings.validate();
  Rng root(seed);
  SupResult best;
  bool have_best = false;
  double best_score = 0.0;
  const auto mesh = solver_mesh(settings.population_size);

  // candidates are ranked by their 3-sigma lower confidence bound so that an
  // exact evaluation wins any statistical tie against a noisy one; the
  // reported value is the winner's own unbiased estimate
  const auto consider = [&](const FunctionalValue& v, const ThetaPopulation& pop,
                            RestartDiagnostics diag) {
    diag.value = v.value;
    diag.stderr = v.stderr;
    const double score = v.value - 3.0 * v.stderr;
    if (!have_best || score > best_score) {
      best_score = score;
      best.value = v.value;
      best.stderr = v.stderr;
      best.argmax = pop;
      best.best_candidate = diag.candidate +
                            (diag.restart < 0 ? std::string(" (direct)")
                                              : " (restart " + std::to_string(diag.restart) + ")");
      have_best = true;
    }
    best.diagnostics.push_back(std::move(diag));
  };

  int eval_counter = 0;
  for (const auto& [name, seed_pop] : mesh) {
    // direct evaluation of the mesh seed
    {
      RestartDiagnostics diag;
      diag.candidate = name;
      diag.restart = -1;
      const auto v = code_functional(D, k, eta, f, seed_pop, settings.mc_samples,
                                     root.split("eval", static_cast<std::uint64_t>(eval_counter++)).next_u64());
      consider(v, seed_pop, std::move(diag));
    }
    for (int r = 0; r < settings.restarts; ++r) {
      RestartDiagnostics diag;
      diag.candidate = name;
      diag.restart = r;
      ThetaPopulation pop = seed_pop;
      Rng run = root.split(name).split("restart", static_cast<std::uint64_t>(r));
      int streak = 0;
      int it = 0;
      for (; it < settings.iterations; ++it) {
        auto step = pd_step(pop, k, D, eta, run.split("step", static_cast<std::uint64_t>(it)).next_u64(),
                            settings.damping);
        if (step.degenerate) break;
        const double dist = ThetaPopulation::sorted_w1(pop, step.pop);
        pop = std::move(step.pop);
        streak = dist < settings.tolerance ? streak + 1 : 0;
        if (it % 25 == 0) {
          const auto probe =
              code_functional(D, k, eta, f, pop, settings.mc_samples / 20 + 1,
                              run.split("probe", static_cast<std::uint64_t>(it)).next_u64());
          diag.trajectory.push_back(probe.value);
        }
        if (streak >= settings.consecutive) break;
      }
      diag.iterations = it;
      diag.converged = streak >= settings.consecutive || D.mean() <= 0.0;
      const auto v = code_functional(D, k, eta, f, pop, settings.mc_samples,
                                     root.split("eval", static_cast<std::uint64_t>(eval_counter++)).next_u64());
      consider(v, pop, std::move(diag));
    }
  }
  return best;
}

struct GeneralMiPrediction {
  double value = 0.0;          // -sup B + ln|Omega| + channel term
  double sup_value = 0.0;
  double sup_stderr = 0.0;
  double channel_term = 0.0;   // E[gamma]/(k xi |Omega|^k) sum_tau E[Lambda(psi(tau))]
  double sym_deviation = 0.0;
  bool pos_warning = false;
  SupResult solver;
};

// check_sym as a free function so callers without the ldgm layer can use it
inline double sym_deviation_max(const WeightFamily& family) {
  double worst = 0.0;
  for (double d : family.sym_deviations()) worst = std::max(worst, std::fabs(d));
  return worst;
}

inline double channel_term_general(const DegreeDistribution& D, const WeightFamily& family) {
  double sum = 0.0;
  for (std::size_t idx = 0; idx < family.table_size(); ++idx)
    for (std::size_t i = 0; i < family.functions.size(); ++i)
      sum += family.prior[i] * big_lambda(family.functions[i].at_index(idx));
  return D.mean() / (family.arity() * family.xi * static_cast<double>(family.table_size())) * sum;
}

// General-theorem prediction. SYM violations are fatal; POS is advisory and
// only raises a warning flag. For parity families the sup search runs the
// theta-space dynamics; other families are evaluated on the mesh populations
// only (the sup has no constructive recipe there).
inline GeneralMiPrediction mi_predict_general(const DegreeDistribution& D,
                                              const WeightFamily& family,
                                              const SolverSettings& settings,
                                              std::uint64_t seed) {
  GeneralMiPrediction out;
  out.sym_deviation = sym_deviation_max(family);
  if (out.sym_deviation > 1e-8)
    throw std::invalid_argument("mi_predict_general: family violates SYM");
  out.channel_term = channel_term_general(D, family);

  const auto eta = parity_family_eta_from_tables(family);
  if (eta) {
    out.solver = solve_sup_code(family.arity(), D, *eta, CodeFunctional::b_form, settings, seed);
  } else {
    // mesh-only: delta_uniform is the one canonical candidate in measure space
    const auto pop = Population::delta_uniform(family.alphabet.size(), settings.population_size);
    const auto v = b_functional(D, family, pop, settings.mc_samples, Rng(seed).split("mesh").next_u64());
    RestartDiagnostics diag;
    diag.candidate = "delta_uniform";
    diag.restart = -1;
    diag.value = v.value;
    diag.stderr = v.stderr;
    out.solver.value = v.value;
    out.solver.stderr = v.stderr;
    out.solver.best_candidate = "delta_uniform (direct)";
    out.solver.diagnostics.push_back(std::move(diag));
  }
  out.sup_value = out.solver.value;
  out.sup_stderr = out.solver.stderr;
  out.value = -out.sup_value + std::log(static_cast<double>(family.alphabet.size())) +
              out.channel_term;
  return out;
}

}  // namespace fgmi
