#ifndef FIELDROAD_RNG_HPP
#define FIELDROAD_RNG_HPP

#include <cstdint>
#include <random>

namespace fieldroad {

/// SplitMix64 finaliser; used to derive well-separated child seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed of stream k under a master seed. Trajectory k always gets child_seed(master, k).
std::uint64_t child_seed(std::uint64_t master, std::uint64_t k);

/// 64-bit Mersenne Twister with explicit, platform-independent conversions to doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Exponential waiting time with the given rate.
  double exponential(double rate);
  /// Standard normal via Box-Muller (deterministic, no cached state).
  double normal();
  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fieldroad

#endif  // FIELDROAD_RNG_HPP
