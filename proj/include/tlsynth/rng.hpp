/* rng.hpp -- seeded random streams shared by every trainer and rollout.
 *
 * All randomness in the library flows through Rng so that a run is
 * bit-reproducible from a single master seed.  Components that need
 * independent streams derive them with mix_seed(seed, stream_tag).
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tlsynth {

// splitmix64 finalizer; decorrelates per-component streams derived from one seed
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // uniform on [0, 1); 53-bit mantissa, independent of libstdc++ distribution
  // internals so streams replay identically across toolchains
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // uniform on the open interval (0, 1)
  double open01() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  // uniform on the half-open interval (0, d]
  double half_open_magnitude(double d) { return d * (1.0 - uniform01()); }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // uniform index in {0, ..., n-1}
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  std::uint64_t raw() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.engine_ == b.engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tlsynth
