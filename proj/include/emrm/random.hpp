#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace emrm {

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Hash of a counter tuple; the value for one (seed, i, j, stream) never
// depends on which thread or in what order it is drawn.
inline std::uint64_t counter_hash(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
  return h;
}

// Uniform in [0, 1) with 53 random bits.
inline double to_unit(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

// Sequential generator for one stream (e.g. one matrix row).
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b = 0)
      : key_(counter_hash({seed, stream_a, stream_b})) {}

  std::uint64_t next() { return mix64(key_ ^ mix64(++counter_)); }
  double uniform() { return to_unit(next()); }
  // Uniform in (0, 1].
  double uniform_open() { return 1.0 - uniform(); }

  // Failures before the first success of a Bernoulli(p) sequence.
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 0;
    const double g = std::floor(std::log(uniform_open()) / std::log1p(-p));
    return g >= 1.8e19 ? UINT64_MAX : static_cast<std::uint64_t>(g);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Standard normal from two counter-derived uniforms (Box-Muller).
inline double counter_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  const double u1 = 1.0 - to_unit(counter_hash({seed, a, b, 1}));
  const double u2 = to_unit(counter_hash({seed, a, b, 2}));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace emrm
