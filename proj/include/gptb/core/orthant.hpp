#pragma once

#include <span>

#include "gptb/core/matrix.hpp"

namespace gptb {

inline constexpr std::size_t kOrthantOracleMaxDimension = 3;

/// P(Z_j <= thresholds[j] for all j), Z ~ N(0, m), for n <= 3 by nested
/// one-dimensional adaptive quadrature (conditioning on the first coordinate).
/// Thresholds may be +-infinity. Throws UnsupportedDimension for n > 3 and
/// NotPositiveDefinite for singular m.
double orthant_prob_oracle(const CorrelationMatrix& m, std::span<const double> thresholds);

/// Standard bivariate normal CDF P(X <= a, Y <= b) with correlation |r| < 1.
double bivariate_normal_cdf(double a, double b, double r);

}  // namespace gptb
