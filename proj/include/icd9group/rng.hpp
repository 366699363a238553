#pragma once

#include <cstdint>
#include <string_view>

namespace icd9group {

/// Deterministic 64-bit generator (xorshift-multiply variant of splitmix64).
/// Used everywhere instead of std:: distributions so that generated streams
/// are identical across standard library implementations.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [lo, hi], inclusive.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    return lo + next_u64() % (hi - lo + 1);
  }

  /// Uniform real in [0, 1).
  double uniform_real() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform real in [lo, hi).
  double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

  /// Standard normal via Box-Muller (no internal caching, two draws per call).
  double normal();

private:
  std::uint64_t state_;
};

/// FNV-1a over arbitrary bytes; also used as the content-fingerprint hash.
std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(std::string_view text);

/// Derives a per-stage seed from the top-level run seed and a fixed label,
/// so all stage randomness fans out from one seed.
std::uint64_t derive_seed(std::uint64_t root_seed, std::string_view label);

/// Lowercase hex rendering of a 64-bit content hash.
std::string hash_hex(std::uint64_t h);

/// Content hash of a whole file. Throws DataError when unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace icd9group
