#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace splitplot {

/// PCG32 generator (XSH-RR 64/32 variant, O'Neill's reference algorithm).
///
/// The `stream` argument selects one of 2^63 statistically independent
/// sequences for the same seed, which is how parallel replicates and draws
/// get their own reproducible substream: stream k is always the same
/// sequence for a given seed, regardless of what other streams were used.
class Pcg32 {
 public:
  Pcg32(uint64_t seed, uint64_t stream) {
    state_ = 0u;
    inc_ = (stream << 1u) | 1u;
    next_u32();
    state_ += seed;
    next_u32();
  }

  uint32_t next_u32() {
    const uint64_t old = state_;
    state_ = old * 6364136223846793005ULL + inc_;
    const uint32_t xorshifted = static_cast<uint32_t>(((old >> 18u) ^ old) >> 27u);
    const uint32_t rot = static_cast<uint32_t>(old >> 59u);
    return (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  }

  uint64_t next_u64() {
    const uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on [0, bound). Lemire's multiply-shift with rejection, so the
  /// result is exactly uniform for every bound.
  uint32_t bounded(uint32_t bound) {
    uint64_t m = static_cast<uint64_t>(next_u32()) * bound;
    auto lo = static_cast<uint32_t>(m);
    if (lo < bound) {
      const uint32_t threshold = (0u - bound) % bound;
      while (lo < threshold) {
        m = static_cast<uint64_t>(next_u32()) * bound;
        lo = static_cast<uint32_t>(m);
      }
    }
    return static_cast<uint32_t>(m >> 32);
  }

  /// Uniform on [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the paired deviate is cached.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_double();  // in (0, 1], keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  uint64_t state_ = 0;
  uint64_t inc_ = 1;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace splitplot
