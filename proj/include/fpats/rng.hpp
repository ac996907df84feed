#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>

namespace fpats {

// Seeded generator with platform-independent distribution mapping.
// std::mt19937_64 output is fully specified by the standard; the
// std::*_distribution adaptors are not, so they are avoided here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform integer in [lo, hi].
  std::int64_t range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  std::string token(std::size_t length, std::string_view alphabet);

  template <typename Container>
  const auto& pick(const Container& items) {
    return items[below(items.size())];
  }

  // Index drawn proportionally to non-negative weights (at least one > 0).
  std::size_t weighted(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

inline constexpr std::string_view kAlnumLower = "abcdefghijklmnopqrstuvwxyz0123456789";
inline constexpr std::string_view kAlnum =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
inline constexpr std::string_view kHexLower = "0123456789abcdef";
inline constexpr std::string_view kDigits = "0123456789";

// 64-bit FNV-1a, used to derive stable sub-seeds from strings.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace fpats
