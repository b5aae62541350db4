#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace masc {

// Deterministic random stream with explicitly coded transforms, so that a
// fixed seed reproduces the exact same draw sequence on every run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Integer in [0, n).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  // Draws k distinct indices from [0, n) by partial Fisher-Yates.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k && i < n; ++i) {
      const std::size_t j = i + below(n - i);
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  // Random point on the probability simplex (uniform via exponential spacings).
  std::vector<double> simplex_point(std::size_t n) {
    std::vector<double> w(n);
    double sum = 0.0;
    for (auto& v : w) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      v = -std::log(u);
      sum += v;
    }
    for (auto& v : w) v /= sum;
    return w;
  }

 private:
  std::uint64_t state_;
};

// Stable derivation of per-task seeds from a base seed and task index.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index, std::uint64_t salt = 0) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1) + 0x632be59bd9b4e019ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace masc
