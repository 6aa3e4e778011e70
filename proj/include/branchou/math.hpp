#pragma once

#include <cmath>

namespace branchou {

inline constexpr double kSeriesSwitch = 1e-6;

// (1 - e^{-2 lambda}) / (2 lambda): variance accumulated over unit time by an
// O-U component relaxing at rate lambda. Equals 1 at lambda = 0.
inline double relaxation_variance(double lambda) {
  if (std::abs(lambda) < kSeriesSwitch) return 1.0 - lambda + 2.0 * lambda * lambda / 3.0;
  return -std::expm1(-2.0 * lambda) / (2.0 * lambda);
}

// (e^{2 lambda} - 1) / (2 lambda), the Ito-isometry variance of
// int_0^1 e^{lambda s} dW_s. Equals 1 at lambda = 0.
inline double growth_variance(double lambda) {
  if (std::abs(lambda) < kSeriesSwitch) return 1.0 + lambda + 2.0 * lambda * lambda / 3.0;
  return std::expm1(2.0 * lambda) / (2.0 * lambda);
}

}  // namespace branchou
