#pragma once

#include <cstdint>
#include <random>

namespace cvarucb {

// Seeded random stream. All stochastic operations take one explicitly;
// there is no global randomness anywhere in the library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1) with 53 bits of precision. Hand-rolled so the
  // stream is identical across standard library implementations.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Index sampled from a probability vector by inverse-CDF walk.
  template <typename Probs>
  int categorical(const Probs& probs) {
    double u = uniform();
    double acc = 0.0;
    int last = 0;
    for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
      acc += probs[i];
      last = i;
      if (u < acc) return i;
    }
    return last;  // u landed in rounding slack past the final cumulative sum
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace cvarucb
