#pragma once

#include <cmath>
#include <cstdint>

namespace langevin {

// Stateless counter-based RNG: every (seed, stream, counter) triple maps to
// one normal draw, so chains can run on any number of workers and still
// produce bit-identical output. The generator is Philox 4x32-10; one block
// yields the two uniforms consumed by a Box-Muller normal. (A single
// splitmix64 finalizer pass is not enough here: strided counters and the
// fixed Box-Muller pair delta leave ~1e-4 cross-stream correlations that OU
// integration accumulates into percent-level bias.)
namespace rng {

inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace detail {

struct Block {
  uint32_t x[4];
};

inline Block philox4x32(uint64_t key64, uint64_t stream, uint64_t counter) {
  constexpr uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  uint32_t c0 = static_cast<uint32_t>(counter);
  uint32_t c1 = static_cast<uint32_t>(counter >> 32);
  uint32_t c2 = static_cast<uint32_t>(stream);
  uint32_t c3 = static_cast<uint32_t>(stream >> 32);
  uint32_t k0 = static_cast<uint32_t>(key64);
  uint32_t k1 = static_cast<uint32_t>(key64 >> 32);
  for (int r = 0; r < 10; ++r) {
    const uint64_t p0 = static_cast<uint64_t>(M0) * c0;
    const uint64_t p1 = static_cast<uint64_t>(M1) * c2;
    const uint32_t n0 = static_cast<uint32_t>(p1 >> 32) ^ c1 ^ k0;
    const uint32_t n1 = static_cast<uint32_t>(p1);
    const uint32_t n2 = static_cast<uint32_t>(p0 >> 32) ^ c3 ^ k1;
    const uint32_t n3 = static_cast<uint32_t>(p0);
    c0 = n0;
    c1 = n1;
    c2 = n2;
    c3 = n3;
    k0 += W0;
    k1 += W1;
  }
  return Block{{c0, c1, c2, c3}};
}

inline double u01(uint32_t hi, uint32_t lo) {
  // 64 bits -> (0, 1]; never 0 so log() is safe
  const uint64_t bits =
      (static_cast<uint64_t>(hi) << 32 | lo) >> 11;
  return (static_cast<double>(bits) + 1.0) * (1.0 / 9007199254740992.0);
}

}  // namespace detail

inline double uniform(uint64_t seed, uint64_t stream, uint64_t counter) {
  const auto b = detail::philox4x32(mix64(seed), stream, counter);
  return detail::u01(b.x[0], b.x[1]);
}

inline double normal(uint64_t seed, uint64_t stream, uint64_t counter) {
  const auto b = detail::philox4x32(mix64(seed), stream, counter);
  const double u1 = detail::u01(b.x[0], b.x[1]);
  const double u2 = detail::u01(b.x[2], b.x[3]);
  static const double two_pi = 8.0 * std::atan(1.0);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Stream ids. Chain streams hash the chain index; named offsets keep
// initialization, truth draws, and observation noise out of the
// trajectory streams.
constexpr uint64_t kChainStream = 0x636861696E000000ull;   // per-chain noise
constexpr uint64_t kInitStream = 0x696E697400000000ull;    // chain initialization
constexpr uint64_t kTruthStream = 0x7472757468000000ull;   // ground-truth draws
constexpr uint64_t kNoiseStream = 0x6F62736E6F697300ull;   // observation noise
constexpr uint64_t kScratchStream = 0x7363726174636800ull; // misc draws

inline uint64_t chain_stream(int chain) {
  return kChainStream + static_cast<uint64_t>(chain);
}

}  // namespace rng
}  // namespace langevin
