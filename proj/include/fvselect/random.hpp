#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace fvselect {

/// SplitMix64 finalizer. Used to scramble seeds and derive sub-streams.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a hash of an experiment tag, so tags can take part in seed derivation.
constexpr std::uint64_t tag_hash(std::string_view tag) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Counter-based stream split: seed(root, tag, replica, index).
///
/// Every component is folded through mix64 in a fixed order, so the seed of a
/// sub-stream depends only on its coordinates and never on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                                    std::uint64_t replica,
                                    std::uint64_t index) noexcept {
  std::uint64_t s = mix64(root);
  s = mix64(s ^ tag);
  s = mix64(s ^ (replica * 0xd1b54a32d192ed03ULL));
  s = mix64(s ^ (index * 0xaef17502108ef2d9ULL));
  return s;
}

/// xoshiro256++ generator with a cached normal sampler.
///
/// Small state (32 bytes) so that per-particle and per-chunk streams stay
/// cheap. Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0x5eed) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& w : s_) {
      z += 0x9e3779b97f4a7c15ULL;
      w = mix64(z);
    }
    normal_.reset();
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

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

  /// Uniform on [0, 1).
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); safe to pass to log().
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
  }

  double normal() { return normal_(*this); }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  bool operator==(const Rng& o) const {
    return s_[0] == o.s_[0] && s_[1] == o.s_[1] && s_[2] == o.s_[2] &&
           s_[3] == o.s_[3];
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace fvselect
