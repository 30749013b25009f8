#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fgmi/degree.hpp"
#include "fgmi/rng.hpp"
#include "fgmi/weights.hpp"

namespace fgmi {

namespace detail {

// Fenwick tree over socket counts; supports O(log n) draw of a uniformly
// random remaining socket.
class SocketTree {
 public:
  explicit SocketTree(const std::vector<long long>& counts)
      : n_(counts.size()), tree_(counts.size() + 1, 0) {
    for (std::size_t i = 0; i < n_; ++i) add(i, counts[i]);
  }

  void add(std::size_t i, long long v) {
    total_ += v;
    for (std::size_t j = i + 1; j <= n_; j += j & (~j + 1)) tree_[j] += v;
  }

  long long total() const { return total_; }

  long long count(std::size_t i) const {
    long long s = prefix(i + 1) - prefix(i);
    return s;
  }

  // index of the socket holding rank r, 0 <= r < total
  std::size_t find(long long r) const {
    std::size_t pos = 0;
    std::size_t mask = 1;
    while ((mask << 1) <= n_) mask <<= 1;
    for (; mask > 0; mask >>= 1) {
      const std::size_t next = pos + mask;
      if (next <= n_ && tree_[next] <= r) {
        pos = next;
        r -= tree_[next];
      }
    }
    return pos;  // 0-based variable index
  }

  std::size_t draw(Rng& rng) const {
    return find(static_cast<long long>(rng.below(static_cast<std::uint64_t>(total_))));
  }

 private:
  long long prefix(std::size_t i) const {
    long long s = 0;
    for (std::size_t j = i; j > 0; j -= j & (~j + 1)) s += tree_[j];
    return s;
  }

  std::size_t n_;
  std::vector<long long> tree_;
  long long total_ = 0;
};

}  // namespace detail

struct Check {
  std::vector<int> neighbors;  // ordered tuple, repetitions allowed
  int weight_id = -1;          // index into FactorGraph::tables, -1 = unweighted
};

struct Pin {
  int variable;
  int symbol;
};

// Bipartite variable/check structure. A weighted graph carries one weight
// table per check (possibly shared); unary pins are kept separately as
// indicator factors.
class FactorGraph {
 public:
  FactorGraph(int n, int q) : n_(n), q_(q) {
    if (n < 0 || q < 2) throw std::invalid_argument("FactorGraph: bad shape");
  }

  int n() const { return n_; }
  int q() const { return q_; }

  const std::vector<Check>& checks() const { return checks_; }
  const std::vector<Pin>& pins() const { return pins_; }
  const std::vector<WeightFunction>& tables() const { return tables_; }

  int add_table(WeightFunction f) {
    if (f.q() != q_) throw std::invalid_argument("FactorGraph: table alphabet mismatch");
    tables_.push_back(std::move(f));
    return static_cast<int>(tables_.size()) - 1;
  }

  void add_check(std::vector<int> neighbors, int weight_id = -1) {
    for (int x : neighbors)
      if (x < 0 || x >= n_) throw std::invalid_argument("FactorGraph: neighbor out of range");
    if (weight_id < -1 || weight_id >= static_cast<int>(tables_.size()))
      throw std::invalid_argument("FactorGraph: bad weight id");
    if (weight_id >= 0 &&
        tables_[static_cast<std::size_t>(weight_id)].arity() !=
            static_cast<int>(neighbors.size()))
      throw std::invalid_argument("FactorGraph: arity mismatch");
    checks_.push_back(Check{std::move(neighbors), weight_id});
  }

  void add_pin(int variable, int symbol) {
    if (variable < 0 || variable >= n_)
      throw std::invalid_argument("FactorGraph: pin variable out of range");
    if (symbol < 0 || symbol >= q_)
      throw std::invalid_argument("FactorGraph: pin symbol out of range");
    pins_.push_back(Pin{variable, symbol});
  }

  bool weighted() const {
    for (const auto& c : checks_)
      if (c.weight_id < 0) return false;
    return true;
  }

  const WeightFunction& weight_of(const Check& c) const {
    if (c.weight_id < 0) throw std::logic_error("FactorGraph: unweighted check");
    return tables_[static_cast<std::size_t>(c.weight_id)];
  }

  std::vector<int> variable_degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n_), 0);
    for (const auto& c : checks_)
      for (int x : c.neighbors) ++deg[static_cast<std::size_t>(x)];
    return deg;
  }

 private:
  int n_;
  int q_;
  std::vector<Check> checks_;
  std::vector<WeightFunction> tables_;
  std::vector<Pin> pins_;
};

// Configuration model: sequential socket draws from nu_s with per-draw
// decrement; one check per k consecutive draws. Requires k | sum(d).
inline FactorGraph configuration_model(const DegreeSequence& d, int k,
                                       std::uint64_t seed, int q = 2) {
  if (k < 1) throw std::invalid_argument("configuration_model: k must be positive");
  for (int deg : d.degrees)
    if (deg < 0) throw std::invalid_argument("configuration_model: negative degree");
  const long long total = d.total();
  if (total % k != 0)
    throw std::invalid_argument("configuration_model: k must divide the socket count");

  FactorGraph g(d.n(), q);
  std::vector<long long> counts(d.degrees.begin(), d.degrees.end());
  detail::SocketTree sockets(counts);
  Rng rng = Rng(seed).split("configuration-model");
  std::vector<int> tuple;
  tuple.reserve(static_cast<std::size_t>(k));
  while (sockets.total() > 0) {
    tuple.clear();
    for (int j = 0; j < k; ++j) {
      const std::size_t x = sockets.draw(rng);
      sockets.add(x, -1);
      tuple.push_back(static_cast<int>(x));
    }
    g.add_check(tuple);
  }
  return g;
}

struct LayeredResult {
  FactorGraph graph;
  bool exhausted = false;       // socket pool hit zero while checks remained
  long completed_layers = 0;    // layers fully processed
  long long truncations = 0;    // sockets clipped by (delta - grad)_+
};

// Batch model G_{n,m,d}: per layer s, m_s neighborhoods iid from nu_s^(x)k,
// then delta_{s+1} = (delta_s - grad_s)_+.
inline LayeredResult layered_model(const DegreeSequence& d, const std::vector<long>& m,
                                   int k, std::uint64_t seed, int q = 2) {
  if (k < 1) throw std::invalid_argument("layered_model: k must be positive");
  LayeredResult out{FactorGraph(d.n(), q)};
  std::vector<long long> counts(d.degrees.begin(), d.degrees.end());
  detail::SocketTree sockets(counts);
  Rng root = Rng(seed).split("layered-model");
  std::vector<long long> drawn(static_cast<std::size_t>(d.n()), 0);
  std::vector<int> touched;
  for (std::size_t s = 0; s < m.size(); ++s) {
    Rng rng = root.split(static_cast<std::uint64_t>(s));
    touched.clear();
    for (long i = 0; i < m[s]; ++i) {
      if (sockets.total() <= 0) {
        out.exhausted = true;
        out.completed_layers = static_cast<long>(s);
        return out;
      }
      std::vector<int> tuple;
      tuple.reserve(static_cast<std::size_t>(k));
      for (int j = 0; j < k; ++j) {
        const std::size_t x = sockets.draw(rng);  // layer-start measure: no decrement yet
        tuple.push_back(static_cast<int>(x));
        if (drawn[x] == 0) touched.push_back(static_cast<int>(x));
        ++drawn[x];
      }
      out.graph.add_check(std::move(tuple));
    }
    // end of layer: apply the truncated decrement
    for (int x : touched) {
      const std::size_t xi = static_cast<std::size_t>(x);
      const long long have = sockets.count(xi);
      const long long dec = std::min(have, drawn[xi]);
      out.truncations += drawn[xi] - dec;
      sockets.add(xi, -dec);
      drawn[xi] = 0;
    }
    out.completed_layers = static_cast<long>(s) + 1;
  }
  return out;
}

// ---- line-oriented text format ----
// header "n k F", one check per line "i: x1 ... xk [w]", pins "pin: x s",
// weight tables as JSON-style arrays "table w: [v0, v1, ...]".

inline void write_graph(std::ostream& os, const FactorGraph& g) {
  int k = 0;
  for (const auto& c : g.checks()) k = std::max(k, static_cast<int>(c.neighbors.size()));
  os << g.n() << ' ' << k << ' ' << g.checks().size() << '\n';
  for (std::size_t i = 0; i < g.checks().size(); ++i) {
    const auto& c = g.checks()[i];
    os << i << ':';
    for (int x : c.neighbors) os << ' ' << x;
    if (c.weight_id >= 0) os << ' ' << 'w' << c.weight_id;
    os << '\n';
  }
  for (const auto& p : g.pins()) os << "pin: " << p.variable << ' ' << p.symbol << '\n';
  char buf[64];
  for (std::size_t w = 0; w < g.tables().size(); ++w) {
    os << "table " << w << ": [";
    const auto& t = g.tables()[w].table();
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", t[i]);
      os << (i ? ", " : "") << buf;
    }
    os << "]\n";
  }
}

inline FactorGraph read_graph(std::istream& is, int q = 2) {
  int n = 0, k = 0;
  std::size_t f = 0;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_graph: empty input");
  {
    std::istringstream h(line);
    if (!(h >> n >> k >> f)) throw std::runtime_error("read_graph: bad header");
  }
  struct RawCheck {
    std::vector<int> nb;
    int wid = -1;
  };
  std::vector<RawCheck> raw;
  std::vector<Pin> pins;
  std::vector<std::pair<int, std::vector<double>>> tables;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "pin:") {
      Pin p{};
      if (!(ls >> p.variable >> p.symbol)) throw std::runtime_error("read_graph: bad pin");
      pins.push_back(p);
    } else if (head == "table") {
      std::string idtok;
      ls >> idtok;
      if (!idtok.empty() && idtok.back() == ':') idtok.pop_back();
      const int wid = std::stoi(idtok);
      std::string rest;
      std::getline(ls, rest);
      std::vector<double> vals;
      std::string num;
      for (char c : rest) {
        if ((c >= '0' && c <= '9') || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E')
          num += c;
        else if (!num.empty()) {
          vals.push_back(std::stod(num));
          num.clear();
        }
      }
      if (!num.empty()) vals.push_back(std::stod(num));
      tables.emplace_back(wid, std::move(vals));
    } else {
      RawCheck c;
      std::string tok;
      while (ls >> tok) {
        if (tok.front() == 'w')
          c.wid = std::stoi(tok.substr(1));
        else
          c.nb.push_back(std::stoi(tok));
      }
      raw.push_back(std::move(c));
    }
  }
  if (raw.size() != f) throw std::runtime_error("read_graph: check count mismatch");
  FactorGraph g(n, q);
  int max_wid = -1;
  for (const auto& [wid, vals] : tables) max_wid = std::max(max_wid, wid);
  if (max_wid >= 0) {
    std::vector<std::vector<double>> slots(static_cast<std::size_t>(max_wid) + 1);
    for (auto& [wid, vals] : tables) slots[static_cast<std::size_t>(wid)] = vals;
    for (auto& vals : slots) {
      if (vals.empty()) throw std::runtime_error("read_graph: missing weight table");
      int arity = 0;
      std::size_t sz = vals.size();
      while (sz > 1) {
        if (sz % static_cast<std::size_t>(q) != 0)
          throw std::runtime_error("read_graph: table size is not a power of q");
        sz /= static_cast<std::size_t>(q);
        ++arity;
      }
      g.add_table(WeightFunction(q, arity, std::move(vals)));
    }
  }
  for (auto& c : raw) g.add_check(std::move(c.nb), c.wid);
  for (const auto& p : pins) g.add_pin(p.variable, p.symbol);
  return g;
}

}  // namespace fgmi
