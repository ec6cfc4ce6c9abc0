#pragma once

#include <cstdint>
#include <random>

namespace deproj {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent generator for stream `index` of a run seeded with `seed`.
/// `domain` separates unrelated uses of the same seed.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t index,
                                  std::uint64_t domain = 0) {
  const std::uint64_t a = splitmix64(seed ^ splitmix64(domain));
  const std::uint64_t b = splitmix64(a + splitmix64(index + 0x632BE59BD9B4E019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

template <typename Rng>
long long poisson_draw(double mean, Rng& rng) {
  if (!(mean > 0)) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(rng);
}

/// Stream domains.
namespace streams {
inline constexpr std::uint64_t kQutNull = 1;
inline constexpr std::uint64_t kZeroScene = 2;
inline constexpr std::uint64_t kSimulation = 3;
inline constexpr std::uint64_t kSources = 4;
inline constexpr std::uint64_t kBootstrap = 5;
inline constexpr std::uint64_t kQutPerTrial = 6;
}  // namespace streams

}  // namespace deproj
