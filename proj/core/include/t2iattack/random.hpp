#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace t2ia {

std::uint64_t splitmix64(std::uint64_t x);

/// FNV-1a over raw bytes, finalized with splitmix64.
std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t salt = 0);

std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// Seeded random source with implementation-independent draws.
///
/// The standard distributions are implementation-defined, so bounded
/// integers and doubles are derived directly from the engine output to keep
/// traces identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be positive.
  std::size_t index(std::size_t bound);

  /// Uniform double in [0, 1).
  double uniform();

  double gaussian();

  Rng fork(std::uint64_t stream) { return Rng(hash_combine(next(), stream)); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace t2ia
