#pragma once

#include <cstdint>
#include <random>

namespace detcal {

/// Seedable generator with a fully specified output stream.
///
/// Engine: std::mt19937_64 (its output sequence is fixed by the C++ standard).
/// Uniform doubles use the top 53 bits: (x >> 11) * 2^-53, giving [0,1).
/// Normals use the Marsaglia polar method, caching the second variate.
/// Bounded integers use rejection sampling on the raw 64-bit output.
/// No std::*_distribution is involved, since those differ between
/// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1).
  double uniform();
  /// Uniform on (0,1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace detcal
