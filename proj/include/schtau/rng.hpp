#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace schtau::rng {

// Philox4x32-10 counter-based generator. A block cipher on a 128-bit
// counter with a 64-bit key: random access to any block, no state to
// carry, so (seed, stream, index) triples can be evaluated in any order
// (or on any thread) with identical results.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// One logical stream of i.i.d. draws, addressed by (seed, stream, index).
// Each 128-bit block yields two doubles; Box-Muller turns them into two
// standard normals.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint32_t stream)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  // Uniform in (0, 1), 53-bit resolution.
  double uniform(std::uint64_t index) const {
    const auto words = block_at(index >> 1);
    const int half = static_cast<int>(index & 1u) * 2;
    return to_unit(words[half], words[half + 1]);
  }

  // Standard normal draw number `index` of this stream.
  double normal(std::uint64_t index) const {
    const auto words = block_at(index >> 1);
    const double u1 = to_unit(words[0], words[1]);
    const double u2 = to_unit(words[2], words[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * M_PI * u2;
    return (index & 1u) ? r * std::sin(phi) : r * std::cos(phi);
  }

  // Fills out[0..n) with normals starting at draw index `first`.
  void fill_normal(double* out, std::size_t n, std::uint64_t first = 0) const {
    std::size_t i = 0;
    std::uint64_t idx = first;
    if ((idx & 1u) && i < n) out[i++] = normal(idx++);
    for (; i + 1 < n; i += 2, idx += 2) {
      const auto words = block_at(idx >> 1);
      const double u1 = to_unit(words[0], words[1]);
      const double u2 = to_unit(words[2], words[3]);
      const double r = std::sqrt(-2.0 * std::log(u1));
      const double phi = 2.0 * M_PI * u2;
      out[i] = r * std::cos(phi);
      out[i + 1] = r * std::sin(phi);
    }
    if (i < n) out[i] = normal(idx);
  }

 private:
  std::array<std::uint32_t, 4> block_at(std::uint64_t blk) const {
    return Philox4x32::block({static_cast<std::uint32_t>(blk),
                              static_cast<std::uint32_t>(blk >> 32), stream_,
                              0x5eedu},
                             key_);
  }

  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits =
        (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
    // (0,1): top 53 bits plus half an ulp keeps log() finite.
    return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
};

}  // namespace schtau::rng
