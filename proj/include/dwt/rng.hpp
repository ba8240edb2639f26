#ifndef DWT_RNG_HPP
#define DWT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace dwt {

// Deterministic random source. The uniform and normal transforms are written
// out explicitly (instead of std:: distributions, whose output is
// implementation-defined) so that equal seeds give bitwise-equal streams.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; two uniforms per draw.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n) by rejection, bias-free.
  std::size_t index(std::size_t n);

  // Fisher-Yates.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent stream seed from (seed, stream tag) via splitmix64.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t tag);

 private:
  std::mt19937_64 engine_;
};

}  // namespace dwt

#endif  // DWT_RNG_HPP
