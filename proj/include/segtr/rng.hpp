#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace segtr {

// All randomness in the project flows through this wrapper so that results
// are reproducible across platforms. std::mt19937_64 is fully specified by
// the standard; the standard *distributions* are not, so we roll our own
// uniform transforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  bool next_bernoulli(double p) { return next_double() < p; }

  // Uniform in [0, n) without modulo bias.
  std::size_t next_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % span);
  }

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named child streams fanned out from the single user-facing seed.
enum class SeedStream : std::uint64_t {
  Split = 1,
  Init = 2,
  Dropout = 3,
  Clt = 4,
  Fixture = 5,
  BatchOrder = 6,
};

inline std::uint64_t derive_seed(std::uint64_t root, SeedStream stream) {
  return mix64(root ^ mix64(static_cast<std::uint64_t>(stream)));
}

}  // namespace segtr
