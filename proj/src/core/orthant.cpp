#include "gptb/core/orthant.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gptb/core/quadrature.hpp"
#include "gptb/core/special.hpp"
#include "gptb/error.hpp"

namespace gptb {

namespace {

// Beyond this many standard deviations the normal mass (< 2e-33) is below any
// tolerance this oracle promises.
constexpr double kTruncation = 12.0;

void push_crossing(std::vector<double>& knots, double level, double slope) {
  if (slope != 0.0) {
    const double z = level / slope;
    if (std::isfinite(z)) knots.push_back(z);
  }
}

}  // namespace

double bivariate_normal_cdf(double a, double b, double r) {
  if (!(std::abs(r) < 1.0)) {
    std::ostringstream os;
    os << "bivariate normal CDF needs |r| < 1, got " << r;
    throw Error(ErrorKind::DegenerateCorrelation, os.str());
  }
  if (a <= -kTruncation || b <= -kTruncation) return 0.0;
  if (r == 0.0) return std_normal_cdf(a) * std_normal_cdf(b);
  // Integrate over the coordinate with the smaller threshold: shorter range.
  if (b < a) std::swap(a, b);
  const double s = std::sqrt((1.0 - r) * (1.0 + r));
  const double hi = std::min(a, kTruncation);
  auto f = [&](double z) { return std_normal_pdf(z) * std_normal_cdf((b - r * z) / s); };
  std::vector<double> knots{0.0};
  push_crossing(knots, b, r);
  return integrate(f, -kTruncation, hi, knots);
}

double orthant_prob_oracle(const CorrelationMatrix& m, std::span<const double> thresholds) {
  const std::size_t n = m.size();
  if (n > kOrthantOracleMaxDimension) {
    std::ostringstream os;
    os << "orthant oracle supports n <= " << kOrthantOracleMaxDimension << ", got n = " << n;
    throw Error(ErrorKind::UnsupportedDimension, os.str());
  }
  if (thresholds.size() != n) {
    std::ostringstream os;
    os << "threshold vector has " << thresholds.size() << " entries, matrix has " << n;
    throw Error(ErrorKind::Configuration, os.str());
  }
  for (double t : thresholds) {
    if (std::isnan(t)) throw Error(ErrorKind::Domain, "orthant threshold is NaN");
  }
  (void)cholesky(m);  // strict positive definiteness gate

  if (n == 1) return std_normal_cdf(thresholds[0]);
  if (n == 2) return bivariate_normal_cdf(thresholds[0], thresholds[1], m(0, 1));

  const double a1 = thresholds[0];
  const double a2 = thresholds[1];
  const double a3 = thresholds[2];
  if (std::min({a1, a2, a3}) <= -kTruncation) return 0.0;
  const double r12 = m(0, 1);
  const double r13 = m(0, 2);
  const double r23 = m(1, 2);
  const double s2 = std::sqrt((1.0 - r12) * (1.0 + r12));
  const double s3 = std::sqrt((1.0 - r13) * (1.0 + r13));
  const double rho = (r23 - r12 * r13) / (s2 * s3);
  auto f = [&](double z) {
    return std_normal_pdf(z) * bivariate_normal_cdf((a2 - r12 * z) / s2, (a3 - r13 * z) / s3, rho);
  };
  std::vector<double> knots{0.0};
  push_crossing(knots, a2, r12);
  push_crossing(knots, a3, r13);
  return integrate(f, -kTruncation, std::min(a1, kTruncation), knots, 1e-12, 14, 1e-13);
}

}  // namespace gptb
