#pragma once

namespace gptb {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

/// Standard normal CDF, saturating to exactly 0 / 1 beyond |x| = 40.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x);

/// log Phi(x), accurate in both tails (log1p on the right, erfc on the left).
double log_std_normal_cdf(double x);

/// Density of the standard bivariate normal with correlation r.
/// Throws ErrorKind::DegenerateCorrelation when |r| >= 1.
double bivariate_normal_density(double x, double y, double r);

}  // namespace gptb
