#ifndef EMOSPOOL_RNG_HPP
#define EMOSPOOL_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace emospool {

namespace detail {

// splitmix64 finalizer; decorrelates nearby seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2c62d694fd5ULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// Named, counter-indexed substream of a master seed.  Streams are fully
// determined by (seed, name, index), so independently scheduled work items
// (bootstrap repetitions, per-day simulations) draw reproducible randomness
// regardless of execution order.
inline std::mt19937_64 substream(std::uint64_t master_seed,
                                 std::string_view name,
                                 std::uint64_t index = 0) {
  std::uint64_t s = detail::mix64(master_seed);
  s = detail::mix64(s ^ detail::fnv1a(name));
  s = detail::mix64(s ^ index);
  return std::mt19937_64(s);
}

inline double runif(std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double rnorm(std::mt19937_64& rng, double mean = 0.0,
                    double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

}  // namespace emospool

#endif  // EMOSPOOL_RNG_HPP
