#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fairsqp {

// splitmix64-based generator. Every stochastic piece of the library draws
// through this so that runs are reproducible across platforms and standard
// library versions (std engines/distributions pin neither).
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() {  // in [0,1)
    return double(next_u64() >> 11) * (1.0 / 9007199254740992.0);
  }

  double normal() {
    // Box-Muller, one value per pair of uniforms; generation speed is not a
    // concern anywhere this is used.
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  int categorical(const std::vector<double>& logits) {
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    std::vector<double> w(logits.size());
    double total = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
      w[i] = std::exp(logits[i] - mx);
      total += w[i];
    }
    double u = uniform() * total;
    for (size_t i = 0; i < w.size(); ++i) {
      u -= w[i];
      if (u <= 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(w.size()) - 1;
  }
};

// Fisher-Yates with a pinned draw sequence (std::shuffle's is
// implementation-defined).
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (size_t i = v.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.next_u64() % i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace fairsqp
