#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace greysvr {

/// SplitMix64: used for seeding and for named sub-seeds. Fully specified, so
/// streams are identical across standard library implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound) noexcept;
  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Standard normal (Box-Muller, one draw per call).
  double normal() noexcept;

 private:
  std::uint64_t state_;
};

/// Deterministic child seed for a named stage ("kfold", "screening", ...).
std::uint64_t derive_seed(std::uint64_t base, std::string_view name) noexcept;

/// Fisher-Yates shuffle of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, SplitMix64& rng);

}  // namespace greysvr
