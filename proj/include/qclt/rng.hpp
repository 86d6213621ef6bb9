#ifndef QCLT_RNG_HPP
#define QCLT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qclt {

/// SplitMix64 finalizer. Used as the counter-based mixing step for stream
/// derivation: every (seed, label, index) triple maps to an independent
/// 64-bit engine seed.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a over a byte string.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Seed for the stream identified by a label and a replicate index.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(seed ^ fnv1a64(label)) + splitmix64(index));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::string_view label,
                          std::uint64_t index = 0) {
  return Engine{derive_seed(seed, label, index)};
}

/// Uniform on [0, 1) from 53 random bits; identical on every platform,
/// unlike std::uniform_real_distribution.
inline double uniform01(Engine &engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Standard normal by the Marsaglia polar method. Stateless, so draws do
/// not depend on a cached second variate.
inline double standard_normal(Engine &engine) {
  for (;;) {
    const double u = 2.0 * uniform01(engine) - 1.0;
    const double v = 2.0 * uniform01(engine) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

} // namespace qclt

#endif // QCLT_RNG_HPP
