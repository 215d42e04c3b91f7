#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace faps {

// Identifier written into event-log headers. Replayability of logged runs
// depends on this generator and the stream-derivation constants below never
// changing under the same identifier.
inline constexpr const char* kRngAlgorithm = "splitmix64+xoshiro256ss:v1";

struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

/// xoshiro256** seeded through splitmix64. Every helper consumes a fixed,
/// documented number of raw draws so logged runs replay exactly:
/// uniform01 = 1 draw, gaussian = 2 draws, uniform_below = 1 draw plus
/// rejections (rejections are themselves seed-deterministic).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& word : state_) word = sm.next();
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Unbiased uniform integer in [0, n). n must be nonzero.
  std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t min = (0 - n) % n;  // 2^64 mod n
    std::uint64_t x = next_u64();
    while (x < min) x = next_u64();
    return x % n;
  }

  /// Standard normal via Box-Muller, exactly two uniform draws per call.
  double gaussian() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), never log(0)
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
};

/// Stream domains keep decision draws, trainer noise, and test fixtures on
/// unrelated substreams of one master seed.
enum class StreamDomain : std::uint64_t {
  decision = 0x01,
  trainer_noise = 0x02,
  fixture = 0x03,
};

inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t key) {
  SplitMix64 sm{master ^ (0x632BE59BD9B4E019ull + 0x9E3779B97F4A7C15ull * key)};
  return sm.next();
}

inline std::uint64_t mix_seed(std::uint64_t master, StreamDomain domain, std::uint64_t index) {
  return mix_seed(mix_seed(master, static_cast<std::uint64_t>(domain)), index);
}

inline Rng substream(std::uint64_t master, StreamDomain domain, std::uint64_t index) {
  return Rng(mix_seed(master, domain, index));
}

}  // namespace faps
