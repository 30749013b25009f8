#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "fgmi/degree.hpp"
#include "fgmi/graph.hpp"
#include "fgmi/stats.hpp"
#include "fgmi/weights.hpp"

using namespace fgmi;

namespace {

WeightFamily two_function_family() {
  // hand-entered tables on Omega={0,1}, k=2
  WeightFunction f1(2, 2, {0.5, 1.5, 1.2, 0.8});
  WeightFunction f2(2, 2, {1.3, 0.4, 0.9, 1.7});
  return WeightFamily(Alphabet(2), {f1, f2}, {0.25, 0.75});
}

}  // namespace

TEST_CASE("xi of the constant family is 1") {
  WeightFunction one(2, 3, std::vector<double>(8, 1.0));
  WeightFamily fam(Alphabet(2), {one}, {1.0});
  REQUIRE(xi_of_family(fam) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("xi matches an independent full-table summation") {
  auto fam = two_function_family();
  // brute force over all q^k entries, written out directly
  double total = 0.0;
  for (int t0 = 0; t0 < 2; ++t0)
    for (int t1 = 0; t1 < 2; ++t1) {
      const std::size_t idx = static_cast<std::size_t>(t0 * 2 + t1);
      total += 0.25 * fam.functions[0].at_index(idx) + 0.75 * fam.functions[1].at_index(idx);
    }
  REQUIRE(xi_of_family(fam) == Catch::Approx(total / 4.0).margin(1e-14));
}

TEST_CASE("sym deviations expose per-assignment gaps") {
  auto fam = two_function_family();
  const auto dev = fam.sym_deviations();
  double mean = 0.0;
  for (double d : dev) mean += d;
  REQUIRE(mean == Catch::Approx(0.0).margin(1e-14));  // deviations average to zero
}

TEST_CASE("point-mass partition assigns one degree everywhere") {
  auto res = sample_d_partition(4, DegreeDistribution::point_mass(3), 11);
  REQUIRE_FALSE(res.rounded);
  for (int d : res.d.degrees) REQUIRE(d == 3);
}

TEST_CASE("half-half partition gives exact class sizes") {
  DegreeDistribution D({{1, 0.5}, {2, 0.5}});
  int ones = 0, twos = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto res = sample_d_partition(2, D, seed);
    REQUIRE_FALSE(res.rounded);
    REQUIRE(res.d.degrees.size() == 2);
    ones = twos = 0;
    for (int d : res.d.degrees) (d == 1 ? ones : twos)++;
    REQUIRE(ones == 1);
    REQUIRE(twos == 1);
  }
}

TEST_CASE("non-integral class sizes are rounded and reported") {
  DegreeDistribution D({{1, 0.5}, {2, 0.5}});
  auto res = sample_d_partition(3, D, 4);
  REQUIRE(res.rounded);
  REQUIRE(res.d.total() >= 4);
  REQUIRE(res.d.n() == 3);
}

TEST_CASE("empirical degree of a random vertex follows D") {
  DegreeDistribution D({{1, 0.3}, {2, 0.5}, {4, 0.2}});
  std::map<int, double> counts;
  const int n = 10;
  const int reps = 10000;
  Rng pick(99);
  for (int r = 0; r < reps; ++r) {
    auto res = sample_d_partition(n, D, static_cast<std::uint64_t>(r));
    counts[res.d.degrees[pick.below(n)]] += 1.0;
  }
  std::vector<double> obs, expd;
  for (auto& [deg, p] : D.mass()) {
    obs.push_back(counts[deg]);
    expd.push_back(p * reps);
  }
  REQUIRE(chi_square_p_value(obs, expd) > 0.01);
}

TEST_CASE("configuration model with one forced check") {
  DegreeSequence d{{1, 1}};
  auto g = configuration_model(d, 2, 7);
  REQUIRE(g.checks().size() == 1);
  REQUIRE(g.variable_degrees() == std::vector<int>{1, 1});
}

TEST_CASE("configuration model matches sequential path enumeration") {
  // n=2, d=(2,2), k=2. Enumerating all socket-draw orders: the first two
  // draws land on the same variable with probability 2 * (2/4)(1/3) = 1/3,
  // which forces checks {1,1},{2,2}; otherwise both checks are {1,2}.
  DegreeSequence d{{2, 2}};
  int split = 0;
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    auto g = configuration_model(d, 2, static_cast<std::uint64_t>(r));
    REQUIRE(g.checks().size() == 2);
    const auto& nb = g.checks()[0].neighbors;
    if (nb[0] == nb[1]) ++split;
    REQUIRE(g.variable_degrees() == std::vector<int>{2, 2});
  }
  const double p = static_cast<double>(split) / reps;
  REQUIRE(p == Catch::Approx(1.0 / 3.0).margin(0.012));
}

TEST_CASE("configuration model output degrees equal d exactly") {
  DegreeDistribution D({{0, 0.2}, {2, 0.5}, {3, 0.3}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto part = sample_d_partition(20, D, seed);
    if (part.d.total() % 3 != 0) continue;
    auto g = configuration_model(part.d, 3, seed);
    REQUIRE(g.variable_degrees() == part.d.degrees);
  }
}

TEST_CASE("configuration model rejects non-divisible socket counts") {
  DegreeSequence d{{1, 1, 1}};
  REQUIRE_THROWS_AS(configuration_model(d, 2, 0), std::invalid_argument);
}

TEST_CASE("layered model with zero plan emits no checks") {
  DegreeSequence d{{2, 2}};
  auto res = layered_model(d, {0, 0, 0}, 2, 5);
  REQUIRE(res.graph.checks().empty());
  REQUIRE_FALSE(res.exhausted);
}

TEST_CASE("layered model draws the first layer from nu^k") {
  // d=(1,1), m=(1), k=2: each ordered pair has probability 1/4
  DegreeSequence d{{1, 1}};
  std::map<std::pair<int, int>, double> counts;
  const int reps = 40000;
  for (int r = 0; r < reps; ++r) {
    auto res = layered_model(d, {1}, 2, static_cast<std::uint64_t>(r));
    REQUIRE(res.graph.checks().size() == 1);
    const auto& nb = res.graph.checks()[0].neighbors;
    counts[{nb[0], nb[1]}] += 1.0;
  }
  std::vector<double> obs, expd;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      obs.push_back(counts[{a, b}]);
      expd.push_back(reps / 4.0);
    }
  REQUIRE(chi_square_p_value(obs, expd) > 0.01);
}

TEST_CASE("layered model truncates remaining sockets at zero") {
  // one layer drawing 4 sockets from d=(1,3): repeats beyond delta are clipped
  DegreeSequence d{{1, 3}};
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto res = layered_model(d, {2}, 2, seed);
    REQUIRE(res.graph.checks().size() == 2);
    auto deg = res.graph.variable_degrees();
    // drawn counts minus truncations equal consumed sockets
    REQUIRE(deg[0] + deg[1] == 4);
  }
}

TEST_CASE("layered model reports socket exhaustion with the partial graph") {
  // d=(1,1), k=2, m=(1,1): when the first check lands on distinct variables
  // the pool empties and layer 2 must abort with the one-check graph attached
  DegreeSequence d{{1, 1}};
  bool saw_exhaustion = false, saw_survival = false;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto res = layered_model(d, {1, 1}, 2, seed);
    const auto& nb = res.graph.checks()[0].neighbors;
    if (nb[0] != nb[1]) {
      REQUIRE(res.exhausted);
      REQUIRE(res.completed_layers == 1);
      REQUIRE(res.graph.checks().size() == 1);
      saw_exhaustion = true;
    } else {
      REQUIRE_FALSE(res.exhausted);
      REQUIRE(res.graph.checks().size() == 2);
      saw_survival = true;
    }
  }
  REQUIRE(saw_exhaustion);
  REQUIRE(saw_survival);
}

TEST_CASE("layered check count equals plan total without exhaustion") {
  DegreeDistribution D = DegreeDistribution::point_mass(3);
  auto part = sample_d_partition(30, D, 17);
  auto plan = alpha_beta_plan(part.d, 3, 0.3, 0.2, 17);
  auto res = layered_model(part.d, plan.counts, 3, 17);
  if (!res.exhausted)
    REQUIRE(static_cast<long long>(res.graph.checks().size()) == plan.total_checks());
}

TEST_CASE("alpha-beta plan layer count follows the formula") {
  DegreeSequence d{{3, 3, 3, 3}};  // sum 12
  auto plan = alpha_beta_plan(d, 3, 0.0, 1.0, 1);
  REQUIRE(plan.s_max == 4);
  auto plan2 = alpha_beta_plan(d, 3, 0.5, 0.01, 1);
  REQUIRE(plan2.s_max == 200);
  auto plan3 = alpha_beta_plan(d, 3, 0.999999, 1.0, 1);
  REQUIRE(plan3.s_max == 0);
  REQUIRE(plan3.counts.empty());
}

TEST_CASE("alpha-beta plan counts have Poisson mean beta") {
  DegreeSequence d{{3, 3, 3, 3}};
  Accumulator acc;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    auto plan = alpha_beta_plan(d, 3, 0.5, 0.01, seed);
    for (long c : plan.counts) acc.add(static_cast<double>(c));
  }
  REQUIRE(acc.mean == Catch::Approx(0.01).margin(3.0 * acc.stderr_mean() + 1e-4));
}

TEST_CASE("socket state exposes the normalized measure") {
  SocketState st{{2, 0, 3}, 1};
  REQUIRE(st.total() == 5);
  const auto nu = st.measure();
  REQUIRE(nu[0] == Catch::Approx(0.4).margin(1e-15));
  REQUIRE(nu[1] == 0.0);
  REQUIRE(nu[2] == Catch::Approx(0.6).margin(1e-15));
  SocketState empty{{0, 0}, 3};
  REQUIRE_THROWS_AS(empty.measure(), std::invalid_argument);
}

TEST_CASE("tv shift distance literal formula") {
  REQUIRE(tv_shift_distance({2, 1, 1}, {1, 0, 0}) == Catch::Approx(1.0 / 6.0).margin(1e-15));
  REQUIRE(tv_shift_distance({2, 1, 1}, {0, 0, 0}) == Catch::Approx(0.0).margin(1e-15));
  REQUIRE_THROWS_AS(tv_shift_distance({0, 0}, {0, 0}), std::invalid_argument);
}

TEST_CASE("tv shift distance equals the half L1 oracle") {
  Rng rng(42);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<long long> delta(5), c(5);
    long long sd = 0, ss = 0;
    for (int i = 0; i < 5; ++i) {
      delta[i] = static_cast<long long>(rng.below(6));
      c[i] = static_cast<long long>(rng.below(5)) - 2;
      sd += delta[i];
      ss += std::max(delta[i] - c[i], 0LL);
    }
    if (sd == 0 || ss == 0) continue;
    double l1 = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double nu = static_cast<double>(delta[i]) / static_cast<double>(sd);
      const double nup = static_cast<double>(std::max(delta[i] - c[i], 0LL)) /
                         static_cast<double>(ss);
      l1 += std::fabs(nu - nup);
    }
    REQUIRE(tv_shift_distance(delta, c) == Catch::Approx(l1 / 2.0).margin(1e-12));
  }
}

TEST_CASE("generators are bit-reproducible for a fixed seed") {
  DegreeDistribution D = DegreeDistribution::point_mass(3);
  auto p1 = sample_d_partition(12, D, 555);
  auto p2 = sample_d_partition(12, D, 555);
  REQUIRE(p1.d.degrees == p2.d.degrees);
  auto g1 = configuration_model(p1.d, 3, 555);
  auto g2 = configuration_model(p2.d, 3, 555);
  REQUIRE(g1.checks().size() == g2.checks().size());
  for (std::size_t i = 0; i < g1.checks().size(); ++i)
    REQUIRE(g1.checks()[i].neighbors == g2.checks()[i].neighbors);
  auto plan1 = alpha_beta_plan(p1.d, 3, 0.1, 0.5, 555);
  auto plan2 = alpha_beta_plan(p1.d, 3, 0.1, 0.5, 555);
  REQUIRE(plan1.counts == plan2.counts);
}

TEST_CASE("empirical degrees of the approximation approach D") {
  DegreeDistribution D({{2, 0.5}, {3, 0.5}});
  const int n = 10000;
  auto part = sample_d_partition(n, D, 2049);
  auto plan = alpha_beta_plan(part.d, 3, 0.01, 0.01, 2049);
  auto res = layered_model(part.d, plan.counts, 3, 2049);
  REQUIRE_FALSE(res.exhausted);
  auto deg = res.graph.variable_degrees();
  std::map<int, double> hist;
  for (int dd : deg) hist[dd] += 1.0 / n;
  double tv = 0.0;
  std::map<int, double> all = hist;
  for (auto& [k, p] : D.mass()) all[k] += 0.0;
  for (auto& [k, _] : all) tv += std::fabs(hist[k] - D.probability(k));
  REQUIRE(tv / 2.0 < 0.05);
}

TEST_CASE("graph text round trip") {
  FactorGraph g(4, 2);
  const int w = g.add_table(WeightFunction(2, 2, {1.4, 0.6, 0.6, 1.4}));
  g.add_check({0, 2}, w);
  g.add_check({1, 3}, w);
  g.add_pin(2, 1);
  std::stringstream ss;
  write_graph(ss, g);
  auto h = read_graph(ss);
  REQUIRE(h.n() == 4);
  REQUIRE(h.checks().size() == 2);
  REQUIRE(h.checks()[0].neighbors == std::vector<int>{0, 2});
  REQUIRE(h.checks()[1].weight_id == 0);
  REQUIRE(h.pins().size() == 1);
  REQUIRE(h.pins()[0].variable == 2);
  REQUIRE(h.tables()[0].table() == g.tables()[0].table());
  std::stringstream ss2;
  write_graph(ss2, h);
  std::stringstream ss3;
  write_graph(ss3, g);
  REQUIRE(ss2.str() == ss3.str());
}
