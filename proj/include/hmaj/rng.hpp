#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace hmaj {

/// splitmix64 finalizer; also used to derive per-trial and per-stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Order-sensitive combination of two 64-bit keys.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(a) ^ (b + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

/// Deterministic stream keyed by (master_seed, stream_id): xoshiro256** whose
/// state is expanded from the key with splitmix64. Owned by a single worker.
///
/// Satisfies UniformRandomBitGenerator, but library code only uses the
/// members below so draw sequences do not depend on the standard library.
class RngHandle {
 public:
  using result_type = std::uint64_t;

  RngHandle(std::uint64_t master_seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }
  result_type next();

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exactly uniform integer in [0, bound) (Lemire's multiply-shift with
  /// rejection of the biased low region). bound must be >= 1.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t master_seed() const { return master_; }
  std::uint64_t stream_id() const { return stream_; }

 private:
  std::array<std::uint64_t, 4> s_{};
  std::uint64_t master_;
  std::uint64_t stream_;
};

}  // namespace hmaj
