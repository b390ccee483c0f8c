#pragma once

#include <cstdint>
#include <random>

namespace cellfree {

// Substream scheme: every random quantity in the toolkit is drawn from a
// generator seeded by substream_seed(root, stream, counter...). The mixing is
// a splitmix64 chain, so substreams are decorrelated, reproducible, and can
// be generated in any order (drops in parallel, draws in parallel).

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = splitmix64(root);
  s = splitmix64(s ^ a);
  s = splitmix64(s ^ b);
  s = splitmix64(s ^ c);
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

// Stream tags used by the experiment harness to keep substreams disjoint.
namespace stream {
constexpr std::uint64_t kScenario = 0x5C01;
constexpr std::uint64_t kMu = 0x5C02;
constexpr std::uint64_t kOracle = 0x5C03;
constexpr std::uint64_t kGrouping = 0x5C04;
}  // namespace stream

}  // namespace cellfree
