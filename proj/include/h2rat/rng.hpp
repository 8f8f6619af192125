#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace h2rat {

/// SplitMix64 stream. Every draw is derived from integer arithmetic plus
/// libm log/cos for normals, so a seed reproduces the same sequence on any
/// IEEE-754 platform with a correctly rounded libm.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();

  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; one draw consumes two uniforms.
  double normal();

  // Independent child stream; consumes one draw from this stream.
  RngStream fork() { return RngStream(next_u64()); }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace h2rat
