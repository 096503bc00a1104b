#pragma once

#include <cstdint>

namespace seqdet {

// splitmix64 finalizer: bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Substream i of a master seed, O(1) in i. Counter-based, so the stream
// assigned to replication i does not depend on how many replications run in
// total or on how work is split across threads.
constexpr std::uint64_t substream(std::uint64_t master, std::uint64_t i) noexcept {
  return mix64(master + (i + 1) * kGoldenGamma);
}

// xoshiro256++ engine. Chosen over the standard-library engines because every
// replication gets its own freshly seeded engine: mt19937_64 pays a 312-word
// init per seed, which dominates short-path Monte Carlo kernels. Seeding fills
// the 256-bit state from a splitmix64 run, per the generator authors' advice.
class Engine {
 public:
  using result_type = std::uint64_t;

  Engine() noexcept : Engine(0) {}
  explicit Engine(std::uint64_t seed) noexcept {
    std::uint64_t z = seed;
    for (auto& word : s_) word = mix64(z += kGoldenGamma);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~std::uint64_t{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

inline Engine make_engine(std::uint64_t master, std::uint64_t replication) noexcept {
  return Engine(substream(master, replication));
}

// Hands out one derived seed per Monte Carlo call site. Orchestration code
// draws these in a fixed order so each operation gets a stable stream domain.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t master) noexcept : master_(master) {}
  std::uint64_t next() noexcept { return substream(master_, index_++); }

 private:
  std::uint64_t master_;
  std::uint64_t index_ = 0;
};

}  // namespace seqdet
