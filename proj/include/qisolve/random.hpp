#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qisolve {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over the bytes of a stream name. Stable across platforms and runs.
constexpr std::uint64_t name_hash(std::string_view name) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Splits one 64-bit master seed into independent named streams
/// ("rows", "cols", "estimator-g3", "rejection", "instance", ...).
class RandomStreams {
 public:
  explicit RandomStreams(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t derive(std::string_view name) const noexcept {
    return mix64(seed_ ^ mix64(name_hash(name)));
  }

  Rng stream(std::string_view name) const { return Rng(derive(name)); }

 private:
  std::uint64_t seed_;
};

/// Child stream number `index` of a parent generator state; used where a routine
/// fans out into per-group streams whose results must not depend on evaluation order.
inline Rng child_stream(std::uint64_t base, std::uint64_t index) {
  return Rng(mix64(base ^ mix64(index + 1)));
}

inline double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace qisolve
