#pragma once

#include <cmath>
#include <cstdint>

namespace chaos {

// splitmix64, used for seeding and for deriving per-replica streams.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic sub-seed for a tagged component of a larger experiment.
inline std::uint64_t mix_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t s = master ^ (0xA24BAED4963EE407ULL * (salt + 1));
  return splitmix64_next(s);
}

// xoshiro256++ with double helpers. One stream per Monte Carlo replica;
// streams are derived from (master seed, replica index) so results do not
// depend on worker count or scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  static RandomStream derived(std::uint64_t master, std::uint64_t index) {
    std::uint64_t sm = master;
    std::uint64_t a = splitmix64_next(sm);
    std::uint64_t b = sm + 0xD1B54A32D192ED03ULL * (index + 1);
    return RandomStream(a ^ splitmix64_next(b));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // uniform on [0,1), 53 random bits
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0,1], safe as a log argument
  double uniform_pos() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // standard normal via Box-Muller (cosine branch); two uniforms per draw
  double gaussian() {
    const double u = uniform_pos();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586476925286766559 * v);
  }

  // Exp(1)
  double exponential() { return -std::log(uniform_pos()); }

  double rademacher() { return (next_u64() & 1u) ? 1.0 : -1.0; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4];
};

}  // namespace chaos
