#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace pcic {

using Rng = std::mt19937_64;

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

/// Laplace with mean zero and unit variance (scale 1/sqrt(2)).
inline double unit_laplace(Rng& rng) {
  const double scale = 1.0 / std::sqrt(2.0);
  const double e1 = std::exponential_distribution<double>(1.0)(rng);
  const double e2 = std::exponential_distribution<double>(1.0)(rng);
  return scale * (e1 - e2);
}

/// Inverse gamma with density proportional to x^{-shape-1} exp(-scale / x).
inline double inverse_gamma(Rng& rng, double shape, double scale) {
  return scale / std::gamma_distribution<double>(shape, 1.0)(rng);
}

}  // namespace pcic
