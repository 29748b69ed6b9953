#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

namespace ebn {

// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Named random streams. Each stream seeds its own generator so that adding
// draws to one stream never shifts another.
enum class Stream : std::uint64_t {
  kDecoder = 1,
  kSignal = 2,
  kInitialWeights = 3,
};

/// Deterministic random source: std::mt19937_64 seeded through SplitMix64.
///
/// The engine is fully specified by the C++ standard. The distributions are
/// implemented here (53-bit uniform, Box-Muller normal) instead of using the
/// <random> distribution classes, whose algorithms are implementation-defined.
/// Outputs are therefore bit-identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream))) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    // Rejection sampling removes modulo bias.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return lo + static_cast<std::int64_t>(draw % span);
  }

  // Standard normal via Box-Muller; the second variate is cached.
  double normal() {
    if (spare_) {
      const double out = *spare_;
      spare_.reset();
      return out;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

}  // namespace ebn
