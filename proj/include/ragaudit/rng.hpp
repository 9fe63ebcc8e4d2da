#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace ragaudit {

/// 64-bit FNV-1a over raw bytes. Stable across platforms; used to derive
/// per-object random streams from string identities.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Combines a seed with string tags into a new seed.
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t seed, const Tags&... tags) {
  std::uint64_t h = mix64(seed ^ 0x9e3779b97f4a7c15ULL);
  ((h = mix64(h ^ fnv1a(std::string_view(tags)))), ...);
  return h;
}

/// xoshiro256** generator seeded through SplitMix64.
///
/// All sampling helpers are implemented here (no std distributions) so that a
/// given seed yields the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();

  /// Uniform integer in [0, n). n must be > 0. Unbiased (rejection sampling).
  std::uint64_t below(std::uint64_t n);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double uniform();

  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::array<std::uint64_t, 4> s_{};
};

}  // namespace ragaudit
