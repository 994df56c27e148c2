#pragma once

#include <cstdint>
#include <limits>

namespace blevy {

// SplitMix64 (Steele, Lea & Flood). Used only to expand seeds.
class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// xoshiro256** (Blackman & Vigna), a UniformRandomBitGenerator with 256 bits
/// of state. Each simulation replicate owns one.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256(std::uint64_t seed) noexcept : seed_(seed) {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Seed this stream was constructed from; recorded alongside run output.
  constexpr std::uint64_t seed() const noexcept { return seed_; }

  friend constexpr bool operator==(const Xoshiro256& a, const Xoshiro256& b) noexcept {
    return a.s_[0] == b.s_[0] && a.s_[1] == b.s_[1] && a.s_[2] == b.s_[2] &&
           a.s_[3] == b.s_[3];
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t seed_;
  std::uint64_t s_[4]{};
};

// Seed of replicate `index` under `master_seed`. Two SplitMix64 finalizer
// rounds keep nearby (master, index) pairs decorrelated.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t index) noexcept {
  SplitMix64 outer(master_seed);
  const std::uint64_t base = outer.next();
  SplitMix64 inner(base ^ (index * 0xD1B54A32D192ED03ULL));
  return inner.next();
}

constexpr Xoshiro256 make_stream(std::uint64_t master_seed, std::uint64_t index) noexcept {
  return Xoshiro256(stream_seed(master_seed, index));
}

}  // namespace blevy
