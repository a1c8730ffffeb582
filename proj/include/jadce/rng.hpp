#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "jadce/types.hpp"

namespace jadce {

// Deterministic random source. Uniforms come straight from mt19937_64 bits and
// normals from an explicit Box-Muller transform, so streams are reproducible
// across standard libraries (std::normal_distribution is not pinned by the
// standard).
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 == 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Circularly-symmetric complex normal, unit variance:
  // two independent N(0,1) scaled by 1/sqrt(2).
  cplx cnormal() {
    const double re = normal();
    const double im = normal();
    return cplx(re * M_SQRT1_2, im * M_SQRT1_2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // +1 or -1 with equal probability.
  double rademacher() { return (eng_() & 1u) ? 1.0 : -1.0; }

  Mat normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Mat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = normal();
    return out;
  }

  CMat cnormal_matrix(Eigen::Index rows, Eigen::Index cols) {
    CMat out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = cnormal();
    return out;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stable per-item substream derivation (splitmix64 finalizer), so samples of a
// dataset can be generated independently and in parallel.
inline uint64_t derive_seed(uint64_t base, uint64_t index) {
  uint64_t z = base + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace jadce
