#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace vecadvect {

// Philox4x32-10 counter-based generator. Streams are addressed by
// (seed, node, path) and a per-step counter, so any block can be produced
// without touching the rest of the stream; runs are reproducible for a given
// seed regardless of thread count or evaluation order.
namespace philox {

inline constexpr std::uint32_t kM0 = 0xD2511F53u;
inline constexpr std::uint32_t kM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void round_once(std::array<std::uint32_t, 4>& c,
                       const std::array<std::uint32_t, 2>& key) {
  const std::uint64_t p0 = std::uint64_t(kM0) * c[0];
  const std::uint64_t p1 = std::uint64_t(kM1) * c[2];
  const std::uint32_t lo0 = std::uint32_t(p0), hi0 = std::uint32_t(p0 >> 32);
  const std::uint32_t lo1 = std::uint32_t(p1), hi1 = std::uint32_t(p1 >> 32);
  c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
}

inline std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                          std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    if (r > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    round_once(ctr, key);
  }
  return ctr;
}

}  // namespace philox

// Maps a u64 to (0,1]; the +1 keeps log() finite in Box-Muller.
inline double u64_to_unit(std::uint64_t x) {
  return (double(x >> 11) + 1.0) * (1.0 / 9007199254740992.0);
}

// Node ids with the top bit set are reserved for internal streams.
inline constexpr std::uint32_t kContourNode = 0xFFFFFFFFu;
inline constexpr std::uint32_t kFieldGenNode = 0xFFFF0001u;
inline constexpr std::uint32_t kCrnNode = 0xFFFF0002u;

class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t node, std::uint32_t path)
      : key_{std::uint32_t(seed & 0xFFFFFFFFu), std::uint32_t(seed >> 32)},
        node_(node),
        path_(path) {}

  // Standard normal pair from counter block (path, node, step, block_idx).
  void normal_pair(std::uint32_t step, std::uint32_t block_idx, double* z) const {
    const auto o = philox::block({path_, node_, step, block_idx}, key_);
    const std::uint64_t a = (std::uint64_t(o[0]) << 32) | o[1];
    const std::uint64_t b = (std::uint64_t(o[2]) << 32) | o[3];
    const double u1 = u64_to_unit(a);
    const double u2 = u64_to_unit(b);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 6.283185307179586476925286766559 * u2;
    z[0] = r * std::cos(t);
    z[1] = r * std::sin(t);
  }

  // Fills out[0..n) using consecutive blocks starting at block_idx0.
  void normals(std::uint32_t step, std::uint32_t block_idx0, double* out,
               int n) const {
    int i = 0;
    std::uint32_t b = block_idx0;
    while (i < n) {
      double z[2];
      normal_pair(step, b++, z);
      out[i++] = z[0];
      if (i < n) out[i++] = z[1];
    }
  }

  // A uniform u64 from half of one block, for non-gaussian draws.
  std::uint64_t bits(std::uint32_t step, std::uint32_t block_idx) const {
    const auto o = philox::block({path_, node_, step, block_idx}, key_);
    return (std::uint64_t(o[0]) << 32) | o[1];
  }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t node_;
  std::uint32_t path_;
};

}  // namespace vecadvect
