#pragma once

#include <cmath>
#include <cstdint>

namespace mflq {

/// Philox4x32-10 counter-based generator. A stream is addressed by
/// (seed, stream, substream); draws within a stream advance a 64-bit counter,
/// so path k of a simulation can use its own stream independently of how many
/// numbers any other path consumes. Same construction, same sequence, on any
/// platform and thread layout. Distinct (stream, substream) pairs map to
/// distinct streams for stream < 2^56 and substream < 2^8.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(((static_cast<std::uint32_t>(stream >> 32) & 0x00FFFFFFu) << 8) |
                   static_cast<std::uint32_t>(substream & 0xFFu)) {}

  std::uint32_t nextU32() {
    if (have_ == 0) refill();
    return out_[--have_];
  }

  std::uint64_t nextU64() {
    const std::uint64_t hi = nextU32();
    return (hi << 32) | nextU32();
  }

  /// Uniform on (0, 1]; never returns 0, so it is safe under log().
  double uniform() {
    const std::uint64_t bits = nextU64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (haveCachedNormal_) {
      haveCachedNormal_ = false;
      return cachedNormal_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    cachedNormal_ = radius * std::sin(angle);
    haveCachedNormal_ = true;
    return radius * std::cos(angle);
  }

  /// Exponential with the given rate (> 0).
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b, std::uint32_t* lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    *lo = static_cast<std::uint32_t>(product);
    return static_cast<std::uint32_t>(product >> 32);
  }

  void refill() {
    std::uint32_t c0 = static_cast<std::uint32_t>(counter_);
    std::uint32_t c1 = static_cast<std::uint32_t>(counter_ >> 32);
    std::uint32_t c2 = stream_lo_;
    std::uint32_t c3 = stream_hi_;
    std::uint32_t k0 = key0_;
    std::uint32_t k1 = key1_;
    for (int round = 0; round < 10; ++round) {
      std::uint32_t lo0, lo1;
      const std::uint32_t hi0 = mulhi(0xD2511F53u, c0, &lo0);
      const std::uint32_t hi1 = mulhi(0xCD9E8D57u, c2, &lo1);
      const std::uint32_t n0 = hi1 ^ c1 ^ k0;
      const std::uint32_t n1 = lo1;
      const std::uint32_t n2 = hi0 ^ c3 ^ k1;
      const std::uint32_t n3 = lo0;
      c0 = n0;
      c1 = n1;
      c2 = n2;
      c3 = n3;
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    out_[0] = c0;
    out_[1] = c1;
    out_[2] = c2;
    out_[3] = c3;
    have_ = 4;
    ++counter_;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t counter_ = 0;
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int have_ = 0;
  double cachedNormal_ = 0.0;
  bool haveCachedNormal_ = false;
};

}  // namespace mflq
