#pragma once

#include <cstdint>
#include <random>

namespace ldg {

// splitmix64: cheap, well-mixed stream derivation. All randomness in a run
// is derived from the master seed through named streams so results do not
// depend on call order or thread scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

enum class Stream : std::uint64_t {
  init = 1,
  shuffle = 2,
  augment = 3,
  mixup = 4,
  kmeans = 5,
  dropout = 6,
  data = 7,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = splitmix64(master ^ splitmix64(static_cast<std::uint64_t>(stream)));
  s = splitmix64(s ^ splitmix64(a));
  return splitmix64(s ^ splitmix64(b));
}

inline std::mt19937_64 make_rng(std::uint64_t master, Stream stream,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  return std::mt19937_64(derive_seed(master, stream, a, b));
}

// Beta(alpha, alpha) via two gamma draws.
inline double sample_beta(std::mt19937_64& rng, double alpha) {
  std::gamma_distribution<double> g(alpha, 1.0);
  double a = g(rng);
  double b = g(rng);
  double s = a + b;
  if (s <= 0.0) return 0.5;
  return a / s;
}

}  // namespace ldg
