#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace mumimo {

// splitmix64 finalizer; used both for seeding and as the generator step.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic, splittable random stream. Sub-streams derived from
// (seed, stream id) are statistically independent, so Monte Carlo samples
// can be evaluated in any order or from any worker.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(mix64(seed) ^ mix64(stream ^ 0xd6e8feb86659fd93ULL));
  }

  Rng substream(std::uint64_t stream) const {
    return Rng::substream(state_, stream);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard real normal, Box-Muller (platform-independent bit determinism)
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  // CN(0,1): real and imaginary parts each N(0, 1/2)
  std::complex<double> cgauss() {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-std::log1p(-u1));
    double th = 2.0 * M_PI * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace mumimo
