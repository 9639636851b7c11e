#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace fracanalog {

/// Counter-based normal generator.
///
/// Output i of a stream is a pure function of (seed, stream, i), so any slice
/// of a sequence can be generated independently and in any order. The
/// algorithm is fixed:
///
///   key     = splitmix64_mix(seed)
///   bits(c) = splitmix64_mix(key + (c + 1) * 0x9E3779B97F4A7C15)
///   c       = (stream << 48) | draw_index
///
/// Uniforms take the top 53 bits. Normals come from the polar-free Box-Muller
/// transform on the uniform pair (2j, 2j + 1):
///
///   r = sqrt(-2 ln(1 - u0)),  z0 = r cos(2 pi u1),  z1 = r sin(2 pi u1)
///
/// Streams occupy disjoint counter ranges as long as a stream draws fewer than
/// 2^48 uniforms.
class CounterRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr unsigned kStreamShift = 48;

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix(seed)), base_(stream << kStreamShift) {}

  constexpr std::uint64_t bits(std::uint64_t draw) const noexcept {
    return mix(key_ + (base_ + draw + 1) * kGolden);
  }

  /// Uniform on [0, 1).
  constexpr double uniform(std::uint64_t draw) const noexcept {
    return static_cast<double>(bits(draw) >> 11) * 0x1.0p-53;
  }

  std::pair<double, double> normal_pair(std::uint64_t pair_index) const {
    const double u0 = uniform(2 * pair_index);
    const double u1 = uniform(2 * pair_index + 1);
    const double r = std::sqrt(-2.0 * std::log1p(-u0));
    const double phi = 2.0 * std::numbers::pi * u1;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  /// Writes normals number offset, offset+1, ... of this stream into out.
  void fill_normal(std::span<double> out, std::uint64_t offset = 0) const {
    std::size_t i = 0;
    std::uint64_t idx = offset;
    if (idx % 2 == 1 && i < out.size()) {
      out[i++] = normal_pair(idx / 2).second;
      ++idx;
    }
    for (; i + 1 < out.size(); i += 2, idx += 2) {
      const auto [z0, z1] = normal_pair(idx / 2);
      out[i] = z0;
      out[i + 1] = z1;
    }
    if (i < out.size()) out[i] = normal_pair(idx / 2).first;
  }

 private:
  std::uint64_t key_;
  std::uint64_t base_;
};

/// Named sub-streams of one seed.
enum class Stream : std::uint64_t {
  kWhiteNoise = 1,
  kLogField = 2,
  kAuxiliary = 3,
};

inline CounterRng make_rng(std::uint64_t seed, Stream stream) noexcept {
  return CounterRng(seed, static_cast<std::uint64_t>(stream));
}

}  // namespace fracanalog
