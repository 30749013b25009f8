#pragma once

// Counter-based random generator: a SplitMix64 finalizer applied to a keyed
// counter. Output i of a stream with key K is mix(K + i*PHI), so streams are
// pure functions of (seed, labels, counter) and runs are bit-reproducible on
// any platform. Substreams are derived by hashing labels into the key; the
// parent stream is never advanced by a split.
//
// Splitting discipline used throughout: every sampling routine takes one
// 64-bit seed and derives one labeled child stream per independent source of
// randomness ("sigma", "graph", "weights", "layer", ...), indexed children
// for per-sample or per-layer streams.

#include <cstdint>
#include <cmath>
#include <string_view>

namespace fgmi {

namespace detail {

inline constexpr std::uint64_t kPhi = 0x9e3779b97f4a7c15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(detail::mix64(seed + detail::kPhi)) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + detail::kPhi * ++ctr_); }

  // uniform in [0,1) with 53 random bits
  double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // unbiased uniform integer in [0,n)
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t lim = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v > lim);
    return v % n;
  }

  bool bernoulli(double p) { return unit() < p; }

  // +1 with probability 1-eta, -1 with probability eta
  int channel_sign(double eta) { return unit() < eta ? -1 : +1; }

  long poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda > 30.0) {
      // split so exp(-lambda) never underflows; Po(a+b) = Po(a) + Po(b)
      const double half = lambda / 2.0;
      return poisson(half) + poisson(lambda - half);
    }
    const double limit = std::exp(-lambda);
    long k = 0;
    double prod = unit();
    while (prod > limit) {
      ++k;
      prod *= unit();
    }
    return k;
  }

  Rng split(std::string_view label) const {
    Rng child(0);
    child.key_ = detail::mix64(key_ ^ detail::fnv1a64(label));
    child.ctr_ = 0;
    return child;
  }

  Rng split(std::uint64_t index) const {
    Rng child(0);
    child.key_ = detail::mix64(key_ ^ (0x517cc1b727220a95ULL * (index + 1)));
    child.ctr_ = 0;
    return child;
  }

  Rng split(std::string_view label, std::uint64_t index) const {
    return split(label).split(index);
  }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace fgmi
