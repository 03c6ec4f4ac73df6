#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sentaug {

std::uint64_t splitmix64(std::uint64_t x);

// Seeded random generator with hand-rolled draws. std::mt19937_64 output is
// pinned by the standard, but the std distributions are not, so every draw
// here goes through a fixed algorithm. Identical seeds give identical
// sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent stream `stream` of a run seeded with `seed`. Streams derived
  // from the same seed never share state, so per-item work can be reordered
  // or parallelized without changing any draw.
  static Rng split(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased draw from [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  // [0, 1) with 53 bits.
  double uniform_double();

  // Box-Muller; consumes two uniform draws per call.
  double normal(double mean, double stddev);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(values[i - 1], values[j]);
    }
  }

  // First k entries of a random permutation of [0, n), k <= n.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

}  // namespace sentaug
