#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "gmmtf/types.hpp"

namespace gmmtf {

// xoshiro256** (Blackman & Vigna), seeded through splitmix64. Output is
// bit-identical on every platform. Distributions are implemented here rather
// than taken from <random> because the standard leaves their algorithms
// unspecified.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  // Independent stream for sub-task `index` of a run seeded with `seed`:
  // the state is seeded from splitmix64(seed ^ splitmix64(index + 1)).
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()();

  // [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [lo, hi] inclusive (rejection, unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Standard normal via the Marsaglia polar method.
  double normal();
  Vector normal_vector(int n);
  // Uniform on the unit sphere in R^n.
  Vector unit_vector(int n);

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gmmtf
