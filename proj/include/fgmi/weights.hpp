#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fgmi/alphabet.hpp"

namespace fgmi {

// k-ary weight function on symbol indices, stored as a dense table over
// Omega^k. Table index of (t_1,...,t_k) is sum_j t_j * q^(k-1-j): the first
// neighbor is the most significant digit.
class WeightFunction {
 public:
  WeightFunction(int q, int arity, std::vector<double> table)
      : q_(q), arity_(arity), table_(std::move(table)) {
    if (q < 2 || arity < 1) throw std::invalid_argument("WeightFunction: bad shape");
    std::size_t want = 1;
    for (int i = 0; i < arity; ++i) want *= static_cast<std::size_t>(q);
    if (table_.size() != want)
      throw std::invalid_argument("WeightFunction: table size must be q^k");
    for (double v : table_)
      if (!(std::isfinite(v) && v >= 0.0))
        throw std::invalid_argument("WeightFunction: entries must be finite and >= 0");
  }

  int q() const { return q_; }
  int arity() const { return arity_; }
  const std::vector<double>& table() const { return table_; }

  double at_index(std::size_t idx) const { return table_[idx]; }

  double operator()(std::span<const int> symbols) const {
    return table_[index_of(symbols)];
  }

  std::size_t index_of(std::span<const int> symbols) const {
    std::size_t idx = 0;
    for (int s : symbols) idx = idx * static_cast<std::size_t>(q_) + static_cast<std::size_t>(s);
    return idx;
  }

  // the paper's admissible range for check weights
  bool in_open_unit2() const {
    for (double v : table_)
      if (!(v > 0.0 && v < 2.0)) return false;
    return true;
  }

 private:
  int q_;
  int arity_;
  std::vector<double> table_;
};

// Measured family (Psi, p) of k-ary weight functions with cached normalizer
// xi = |Omega|^-k sum_tau E_p[psi(tau)].
struct WeightFamily {
  Alphabet alphabet;
  std::vector<WeightFunction> functions;
  std::vector<double> prior;
  double xi = 0.0;

  WeightFamily(Alphabet a, std::vector<WeightFunction> fns, std::vector<double> p)
      : alphabet(std::move(a)), functions(std::move(fns)), prior(std::move(p)) {
    if (functions.empty() || functions.size() != prior.size())
      throw std::invalid_argument("WeightFamily: functions/prior mismatch");
    const int k = functions.front().arity();
    for (const auto& f : functions) {
      if (f.arity() != k) throw std::invalid_argument("WeightFamily: mixed arity");
      if (f.q() != alphabet.size())
        throw std::invalid_argument("WeightFamily: alphabet size mismatch");
    }
    double s = 0.0;
    for (double v : prior) {
      if (v < 0.0) throw std::invalid_argument("WeightFamily: negative prior");
      s += v;
    }
    if (std::fabs(s - 1.0) > 1e-12)
      throw std::invalid_argument("WeightFamily: prior must sum to 1");
    xi = compute_xi();
  }

  int arity() const { return functions.front().arity(); }
  std::size_t table_size() const { return functions.front().table().size(); }

  // strict admissibility: every table entry in the open interval (0,2)
  void validate_open_range() const {
    for (const auto& f : functions)
      if (!f.in_open_unit2())
        throw std::invalid_argument("WeightFamily: weight values must lie in (0,2)");
  }

  double compute_xi() const {
    const std::size_t m = table_size();
    double total = 0.0;
    for (std::size_t idx = 0; idx < m; ++idx) {
      double e = 0.0;
      for (std::size_t i = 0; i < functions.size(); ++i)
        e += prior[i] * functions[i].at_index(idx);
      total += e;
    }
    return total / static_cast<double>(m);
  }

  // E_p[psi(tau)] - xi per assignment tau, in table-index order
  std::vector<double> sym_deviations() const {
    const std::size_t m = table_size();
    std::vector<double> dev(m, 0.0);
    for (std::size_t idx = 0; idx < m; ++idx) {
      double e = 0.0;
      for (std::size_t i = 0; i < functions.size(); ++i)
        e += prior[i] * functions[i].at_index(idx);
      dev[idx] = e - xi;
    }
    return dev;
  }
};

inline double xi_of_family(const WeightFamily& family) { return family.compute_xi(); }

// Recognizes the two-function parity family {1 + s(1-2 eta) prod sigma} with
// uniform prior and returns its eta; nullopt for anything else.
inline std::optional<double> parity_family_eta_from_tables(const WeightFamily& family) {
  if (family.alphabet.size() != 2 || family.functions.size() != 2) return std::nullopt;
  if (std::fabs(family.prior[0] - 0.5) > 1e-12) return std::nullopt;
  const auto parity = [](std::size_t idx) {
    int bits = 0;
    while (idx) {
      bits ^= static_cast<int>(idx & 1);
      idx >>= 1;
    }
    return bits ? -1 : +1;
  };
  const double c0 = family.functions[0].at_index(0) - 1.0;
  const double c1 = family.functions[1].at_index(0) - 1.0;
  if (std::fabs(c0 + c1) > 1e-12) return std::nullopt;
  for (std::size_t idx = 0; idx < family.table_size(); ++idx) {
    const int p = parity(idx);
    if (std::fabs(family.functions[0].at_index(idx) - (1.0 + c0 * p)) > 1e-12) return std::nullopt;
    if (std::fabs(family.functions[1].at_index(idx) - (1.0 - c0 * p)) > 1e-12) return std::nullopt;
  }
  if (std::fabs(c0) > 1.0 + 1e-12) return std::nullopt;
  return (1.0 - c0) / 2.0;
}

}  // namespace fgmi
