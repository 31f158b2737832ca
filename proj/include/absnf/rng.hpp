#pragma once

#include <cstdint>
#include <random>

namespace absnf {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Independent stream seed for (seed, stream index); used so that draws and
/// trials can run on any worker without changing their results.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (0xA3EC647659359ACDull * (stream + 1));
  return splitmix64_next(state);
}

/// Deterministic random source. mt19937_64 output is fixed by the standard
/// and the uniform mappings below avoid distribution classes, whose results
/// vary between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t state = seed;
    std::seed_seq seq{splitmix64_next(state), splitmix64_next(state), splitmix64_next(state),
                      splitmix64_next(state)};
    gen_.seed(seq);
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    auto range = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % range);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace absnf
