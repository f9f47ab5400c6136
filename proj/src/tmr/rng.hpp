#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace tmr {

// Deterministic PRNG used everywhere instead of <random> distributions:
// std::normal_distribution and friends are implementation-defined, which
// would break the byte-identical-artifacts guarantee across toolchains.
// xoshiro256** seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();

  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t uniform_int(std::uint64_t n);

  // Standard normal via Box-Muller (no cached spare, so call order is
  // the only state).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Exponential with the given rate (mean 1/rate).
  double exponential(double rate);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

// Stable stream derivation: children of one master seed never collide as
// long as (tag, a, b) differ, so parallel work items are schedule-invariant.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0);

}  // namespace tmr
