#include "gptb/core/special.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gptb/error.hpp"

namespace gptb {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSaturation = 40.0;

}  // namespace

double std_normal_cdf(double x) {
  if (std::isnan(x)) return x;
  if (x < -kSaturation) return 0.0;
  if (x > kSaturation) return 1.0;
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double log_std_normal_cdf(double x) {
  if (x > 0.0) return std::log1p(-std_normal_cdf(-x));
  if (x < -kSaturation) return -std::numeric_limits<double>::infinity();
  return std::log(0.5 * std::erfc(-x * kInvSqrt2));
}

double bivariate_normal_density(double x, double y, double r) {
  if (!(std::abs(r) < 1.0)) {
    std::ostringstream os;
    os << "bivariate normal density needs |r| < 1, got " << r;
    throw Error(ErrorKind::DegenerateCorrelation, os.str());
  }
  const double one_minus = (1.0 - r) * (1.0 + r);
  const double q = (x * x - 2.0 * r * x * y + y * y) / (2.0 * one_minus);
  return std::exp(-q) / (2.0 * kPi * std::sqrt(one_minus));
}

}  // namespace gptb
