#pragma once

// Random instance generators for the soundness sweep and the tests.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "gptb/core/matrix.hpp"
#include "gptb/tail_bounds.hpp"

namespace gptb {

/// A^T A normalized to unit diagonal, A an n x n standard Gaussian matrix.
inline CorrelationMatrix random_correlation(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Matrix a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = g(rng);
  Matrix cov(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += a(k, i) * a(k, j);
      cov(i, j) = s;
    }
  return CorrelationMatrix::from_covariance(cov);
}

/// Explicit (c, d) of length n-1 valid for every pivot under the suffix
/// convention, found by rejection; nullopt when `tries` draws all fail.
inline std::optional<CdSequences> random_valid_cd(std::mt19937_64& rng, const CorrelationMatrix& m,
                                                  int tries = 200) {
  std::uniform_real_distribution<double> uc(0.0, 0.6);
  std::uniform_real_distribution<double> ud(0.05, 1.0);
  const std::size_t len = m.size() - 1;
  BoundConfig cfg;
  for (int t = 0; t < tries; ++t) {
    cfg.c.resize(len);
    cfg.d.resize(len);
    for (std::size_t j = 0; j < len; ++j) {
      cfg.c[j] = uc(rng);
      cfg.d[j] = ud(rng);
    }
    bool ok = true;
    for (std::size_t p = 2; p <= m.size() && ok; ++p) {
      const auto cd = cd_for_pivot(m, p, cfg);
      ok = validate_cd(m, p, cd.c, cd.d).passed();
    }
    if (ok) return CdSequences{cfg.c, cfg.d};
  }
  return std::nullopt;
}

/// Lags r(0..n-1) of a nonincreasing nonnegative correlation drawn from one
/// of several positive-definite families.
inline std::vector<double> random_stationary_lags(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> family(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> r(n);
  const int f = family(rng);
  const double rho = 0.05 + 0.9 * unit(rng);
  const double theta = 0.05 + 2.0 * unit(rng);
  const double alpha = 0.2 + 1.8 * unit(rng);
  const double w = unit(rng);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k);
    switch (f) {
      case 0:  // AR(1)
        r[k] = std::pow(rho, t);
        break;
      case 1:  // powered exponential, PD for alpha <= 2
        r[k] = std::exp(-theta * std::pow(t, alpha));
        break;
      case 2:  // generalized Cauchy
        r[k] = std::pow(1.0 + std::pow(theta * t, alpha), -1.0);
        break;
      default:  // mixture of AR(1) and white noise
        r[k] = k == 0 ? 1.0 : w * std::pow(rho, t);
    }
  }
  return r;
}

}  // namespace gptb
