#pragma once

#include <cstdint>
#include <vector>

namespace pairmatch {

// SplitMix64 mixing step. Bit-stable on every platform, unlike the standard
// library distributions.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic stream derivation: every random draw site gets its own seed
// derived from (base, tags...), so replays are bit-exact and streams never
// alias across call sites.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
  std::uint64_t h = mix64(base ^ 0x5851f42d4c957f2dull);
  h = mix64(h ^ mix64(a));
  h = mix64(h ^ mix64(b));
  h = mix64(h ^ mix64(c));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1) with 53 bits
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return next_double() < p; }

  // unbiased uniform integer in [0, n), n >= 1
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t lim = n == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= lim);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // After the call, v[0..k) is a uniform k-subset of v in uniform order.
  template <typename T>
  void partial_shuffle(std::vector<T>& v, std::size_t k) {
    if (k > v.size()) k = v.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(below(v.size() - i));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Stateless per-pair uniform used for lazy adjacency: the outcome of a pair is
// a pure function of (graph seed, lo, hi), so repeated access is consistent
// without storing O(n^2) state.
inline double pair_uniform(std::uint64_t graph_seed, std::uint64_t lo, std::uint64_t hi) {
  return static_cast<double>(derive_seed(graph_seed, lo, hi, 0x70616972ull) >> 11) * 0x1.0p-53;
}

}  // namespace pairmatch
