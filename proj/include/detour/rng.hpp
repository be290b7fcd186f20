#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace detour {

// Counter-based generator. The i-th draw of a stream is a pure function of
// (key, i), so any substream can be reconstructed without replaying the draws
// that preceded it.
//
// Substream derivation used throughout the harness:
//   run      = CounterRng(seed)
//   epoch e  = run.substream(kEpochTag).substream(e)
//   step t   = epoch.substream(t)
//   site s   = step.substream(s)   (s = 0: step forward, 1: step aside)
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  CounterRng substream(std::uint64_t tag) const {
    CounterRng child(0);
    child.key_ = mix(key_ ^ mix(tag + 0x9e3779b97f4a7c15ULL));
    return child;
  }

  std::uint64_t next_u64() {
    const std::uint64_t z = key_ + (counter_ + 1) * 0x9e3779b97f4a7c15ULL;
    ++counter_;
    return mix(z);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Inverse-CDF draw from a probability vector.
  std::size_t categorical(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    // Rounding can leave acc slightly below 1; fall back to the last
    // outcome with positive mass.
    for (std::size_t i = probs.size(); i-- > 0;) {
      if (probs[i] > 0.0) return i;
    }
    return probs.size() - 1;
  }

  std::uint64_t counter() const { return counter_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() { return next_u64(); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace detour
