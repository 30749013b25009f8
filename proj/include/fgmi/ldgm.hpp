#pragma once

// Code-specific layer: the +-1 parity weight family, BSC channel and encoder,
// the exact small-code mutual-information oracle, the SYM/POS checkers, and
// the code-theorem prediction assembled from the L functional.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fgmi/cavity.hpp"
#include "fgmi/gibbs.hpp"
#include "fgmi/graph.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/stats.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

// BSC with flip probability eta; J = 1 - 2 Be(eta)
struct ChannelSpec {
  double eta;

  explicit ChannelSpec(double e) : eta(e) {
    if (!(eta > 0.0 && eta < 1.0))
      throw std::invalid_argument("ChannelSpec: eta must lie in (0,1)");
  }
  int sample_sign(Rng& rng) const { return rng.channel_sign(eta); }
};

inline double binary_entropy_nats(double eta) {
  double h = 0.0;
  if (eta > 0.0) h -= eta * std::log(eta);
  if (eta < 1.0) h -= (1.0 - eta) * std::log(1.0 - eta);
  return h;
}

// psi_s(sigma) = 1 + s (1-2 eta) prod_i sigma_i on spin indices (0 -> +1)
inline WeightFunction parity_weight_function(int k, int s, double eta) {
  const double c = 1.0 - 2.0 * eta;
  std::vector<double> table(static_cast<std::size_t>(1) << k);
  for (std::size_t idx = 0; idx < table.size(); ++idx) {
    int parity = 1;
    for (int j = 0; j < k; ++j)
      if ((idx >> j) & 1) parity = -parity;
    table[idx] = 1.0 + s * c * parity;
  }
  return WeightFunction(2, k, std::move(table));
}

// {psi_{+1}, psi_{-1}} with the uniform prior; xi = 1
inline WeightFamily code_weight_family(int k, double eta) {
  if (k < 2) throw std::invalid_argument("code_weight_family: k must be >= 2");
  if (!(eta > 0.0 && eta < 1.0))
    throw std::invalid_argument("code_weight_family: eta in {0,1} puts weights on the boundary");
  WeightFamily fam(Alphabet::binary_spins(),
                   {parity_weight_function(k, +1, eta), parity_weight_function(k, -1, eta)},
                   {0.5, 0.5});
  fam.validate_open_range();
  return fam;
}

// max_sigma |E_p[psi(sigma)] - xi|
inline double check_sym(const WeightFamily& family) { return sym_deviation_max(family); }

// ---- encoder ----

struct CodeInstance {
  FactorGraph graph;        // unweighted; check a = codeword bit a
  std::vector<int> message;   // bits 0/1 over variables
  std::vector<int> codeword;  // bits 0/1 over checks
};

inline std::vector<int> encode(const FactorGraph& g, const std::vector<int>& message) {
  if (static_cast<int>(message.size()) != g.n())
    throw std::invalid_argument("encode: message length must equal n");
  std::vector<int> codeword;
  codeword.reserve(g.checks().size());
  for (const auto& c : g.checks()) {
    int bit = 0;
    for (int x : c.neighbors) bit ^= message[static_cast<std::size_t>(x)];
    codeword.push_back(bit);
  }
  return codeword;
}

struct TransmitResult {
  std::vector<int> codeword;
  std::vector<int> received;
  long flips = 0;
};

inline TransmitResult encode_transmit(const FactorGraph& g, const std::vector<int>& message,
                                      double eta, std::uint64_t seed) {
  TransmitResult out;
  out.codeword = encode(g, message);
  out.received = out.codeword;
  Rng rng = Rng(seed).split("channel");
  for (auto& bit : out.received)
    if (rng.bernoulli(eta)) {
      bit ^= 1;
      ++out.flips;
    }
  return out;
}

// ---- exact mutual information of a small code over the BSC ----
// I(X;Y) = H(Y) - M h(eta) with H(Y) from the exact output law
// P(y) = sum_xi 2^-n P_eta(y | x(xi)). Works in nats; accepts eta = 0.

inline double exact_code_mi(const FactorGraph& g, double eta, int cap_bits = 26) {
  const int n = g.n();
  const int m = static_cast<int>(g.checks().size());
  if (n + m > cap_bits)
    throw EnumerationCapError("exact_code_mi: n + M exceeds the enumeration cap");
  if (!(eta >= 0.0 && eta <= 1.0)) throw std::invalid_argument("exact_code_mi: bad eta");
  if (m == 0) return 0.0;

  // parity masks; repeated neighbors cancel mod 2
  std::vector<std::uint32_t> masks(static_cast<std::size_t>(m), 0);
  for (int a = 0; a < m; ++a)
    for (int x : g.checks()[static_cast<std::size_t>(a)].neighbors)
      masks[static_cast<std::size_t>(a)] ^= (std::uint32_t{1} << x);

  const std::uint32_t n_states = std::uint32_t{1} << n;
  const std::uint32_t m_states = std::uint32_t{1} << m;
  std::vector<double> codeword_mass(m_states, 0.0);
  for (std::uint32_t xi = 0; xi < n_states; ++xi) {
    std::uint32_t x = 0;
    for (int a = 0; a < m; ++a)
      x |= static_cast<std::uint32_t>(__builtin_popcount(xi & masks[static_cast<std::size_t>(a)]) & 1)
           << a;
    codeword_mass[x] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(n_states);
  std::vector<std::pair<std::uint32_t, double>> support;
  for (std::uint32_t x = 0; x < m_states; ++x)
    if (codeword_mass[x] > 0.0) support.emplace_back(x, codeword_mass[x] * inv);

  // flip-count likelihoods eta^j (1-eta)^(M-j)
  std::vector<double> like(static_cast<std::size_t>(m) + 1, 0.0);
  for (int j = 0; j <= m; ++j) {
    double v = 1.0;
    for (int i = 0; i < j; ++i) v *= eta;
    for (int i = 0; i < m - j; ++i) v *= 1.0 - eta;
    like[static_cast<std::size_t>(j)] = v;
  }

  double h_y = 0.0;
  for (std::uint32_t y = 0; y < m_states; ++y) {
    double p = 0.0;
    for (const auto& [x, w] : support)
      p += w * like[static_cast<std::size_t>(__builtin_popcount(x ^ y))];
    if (p > 0.0) h_y -= p * std::log(p);
  }
  return h_y - m * binary_entropy_nats(eta);
}

// ---- POS checkers ----

// per-l values E[((1-2 eta) s)^l] (X_l^k + (k-1) Y_l^k - k X_l Y_l^(k-1))
inline std::vector<double> check_pos_moments(int k, double eta, const ThetaPopulation& pop,
                                             const ThetaPopulation& pop2, int l_max) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(l_max));
  const double c = 1.0 - 2.0 * eta;
  for (int l = 1; l <= l_max; ++l) {
    if (l % 2 == 1) {
      out.push_back(0.0);  // E[s^l] = 0 for uniform s
      continue;
    }
    double xl = 0.0, yl = 0.0;
    for (double t : pop.values()) xl += std::pow(t, l);
    for (double t : pop2.values()) yl += std::pow(t, l);
    xl /= static_cast<double>(pop.size());
    yl /= static_cast<double>(pop2.size());
    const double comb = std::pow(xl, k) + (k - 1) * std::pow(yl, k) -
                        k * xl * std::pow(yl, k - 1);
    out.push_back(std::pow(c, l) * comb);
  }
  return out;
}

// Monte Carlo estimate of the POS display:
// E[Lambda(sum psi prod mu) + (k-1) Lambda(sum psi prod mu')
//   - k Lambda(sum psi mu_1 prod_{j>=2} mu'_j)]
inline MonteCarloValue check_pos_general(const WeightFamily& family, const Population& pi,
                                         const Population& pi2, std::size_t mc_samples,
                                         std::uint64_t seed) {
  pi.validate_mean_uniform();
  pi2.validate_mean_uniform();
  const int k = family.arity();
  Rng root = Rng(seed).split("pos");
  Accumulator acc;
  std::vector<std::span<const double>> mu(static_cast<std::size_t>(k));
  std::vector<std::span<const double>> mu2(static_cast<std::size_t>(k));
  std::vector<std::span<const double>> mixed(static_cast<std::size_t>(k));
  for (std::size_t s = 0; s < mc_samples; ++s) {
    Rng rs = root.split(s);
    const std::size_t fi = detail::sample_prior_index(family, rs);
    for (int j = 0; j < k; ++j) mu[static_cast<std::size_t>(j)] = pi.member(rs.below(pi.size()));
    for (int j = 0; j < k; ++j) mu2[static_cast<std::size_t>(j)] = pi2.member(rs.below(pi2.size()));
    mixed[0] = mu[0];
    for (int j = 1; j < k; ++j) mixed[static_cast<std::size_t>(j)] = mu2[static_cast<std::size_t>(j)];
    const auto& psi = family.functions[fi];
    const double v = big_lambda(detail::edge_value(psi, mu)) +
                     (k - 1) * big_lambda(detail::edge_value(psi, mu2)) -
                     k * big_lambda(detail::edge_value(psi, mixed));
    acc.add(v);
  }
  return {acc.mean, acc.stderr_mean(), mc_samples};
}

// ---- code-theorem prediction ----

struct CodeMiPrediction {
  double sup_value = 0.0;
  double sup_stderr = 0.0;
  // the theorem's printed channel constant E[gamma]/(2k) ((1-eta)ln(1-eta)+ln2+eta ln eta)
  double value_paper_constant = 0.0;
  // the same assembly with the general theorem's constant, twice the above
  double value_general_constant = 0.0;
  double channel_term_paper = 0.0;
  SupResult solver;
};

inline CodeMiPrediction mi_predict_codes(int k, const DegreeDistribution& D, double eta,
                                         const SolverSettings& settings, std::uint64_t seed) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("mi_predict_codes: eta in (0,1)");
  CodeMiPrediction out;
  out.solver = solve_sup_code(k, D, eta, CodeFunctional::l_form, settings, seed);
  out.sup_value = out.solver.value;
  out.sup_stderr = out.solver.stderr;
  const double eg = D.mean();
  out.channel_term_paper =
      eg / (2.0 * k) * ((1.0 - eta) * std::log(1.0 - eta) + std::log(2.0) + eta * std::log(eta));
  out.value_paper_constant = -out.sup_value + out.channel_term_paper + std::log(2.0);
  out.value_general_constant = -out.sup_value + 2.0 * out.channel_term_paper + std::log(2.0);
  return out;
}

// ---- generator description file: "n M k" header, one neighbor tuple per codeword bit ----

inline void write_code(std::ostream& os, const FactorGraph& g) {
  int k = 0;
  for (const auto& c : g.checks()) k = std::max(k, static_cast<int>(c.neighbors.size()));
  os << g.n() << ' ' << g.checks().size() << ' ' << k << '\n';
  for (const auto& c : g.checks()) {
    for (std::size_t j = 0; j < c.neighbors.size(); ++j)
      os << (j ? " " : "") << c.neighbors[j];
    os << '\n';
  }
}

inline FactorGraph read_code(std::istream& is) {
  int n = 0, m = 0, k = 0;
  if (!(is >> n >> m >> k)) throw std::runtime_error("read_code: bad header");
  FactorGraph g(n, 2);
  for (int a = 0; a < m; ++a) {
    std::vector<int> nb(static_cast<std::size_t>(k));
    for (auto& x : nb)
      if (!(is >> x)) throw std::runtime_error("read_code: truncated tuple");
    g.add_check(std::move(nb));
  }
  return g;
}

}  // namespace fgmi
