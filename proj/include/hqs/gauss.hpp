// Zero-mean Gaussian CDF used by the conditional sub-interval model.
#pragma once

#include <cmath>

#include "hqs/common.hpp"

namespace hqs {

// Evaluations are clamped at |x/sigma| = 8 to the tail constants, which
// keeps CDF differences out of the catastrophic-cancellation regime.
inline constexpr double kCdfClampSigmas = 8.0;

inline double gaussian_cdf(double x, double sigma) {
  if (!(sigma > 0.0)) throw StructuralError("gaussian_cdf requires sigma > 0");
  double t = x / sigma;
  if (t > kCdfClampSigmas) t = kCdfClampSigmas;
  if (t < -kCdfClampSigmas) t = -kCdfClampSigmas;
  // 1/sqrt(2)
  return 0.5 + 0.5 * std::erf(t * 0.70710678118654752440);
}

}  // namespace hqs
