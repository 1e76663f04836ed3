#pragma once

#include <cstdint>
#include <random>

namespace chain {

using Rng = std::mt19937_64;

// Independent random streams. Each consumer derives its own seed from
// (experiment seed, stream, counter) so adding a consumer never shifts
// another's sequence.
enum class Stream : std::uint64_t {
  kPool = 1,
  kFirstQuery = 2,
  kTrainBatches = 3,
  kBilevelBatches = 4,
  kBadge = 5,
  kRandomQuery = 6,
  kRound = 7,
  kSynth = 8,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                                    std::uint64_t counter = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return splitmix64(h ^ counter);
}

inline Rng make_rng(std::uint64_t seed, Stream stream,
                    std::uint64_t counter = 0) {
  return Rng(derive_seed(seed, stream, counter));
}

}  // namespace chain
