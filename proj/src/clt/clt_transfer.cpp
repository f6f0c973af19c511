#include "gptb/clt_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gptb/core/matrix.hpp"
#include "gptb/core/orthant.hpp"
#include "gptb/core/philox.hpp"
#include "gptb/error.hpp"
#include "gptb/prime_process.hpp"

namespace gptb {

namespace {

void require_interval(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
    std::ostringstream os;
    os << "smoothing interval needs finite a < b, got [" << a << ", " << b << "]";
    throw Error(ErrorKind::Domain, os.str());
  }
}

// Rademacher sums are tabulated over groups of 8 rows when the table fits.
constexpr std::size_t kGroup = 8;
constexpr std::size_t kMaxTableDoubles = std::size_t{8} << 20;  // 64 MiB

}  // namespace

SmoothingValue smoothing_value(double z, double a, double b) {
  require_interval(a, b);
  SmoothingValue v;
  if (z <= a) {
    v.s = 1.0;
    return v;
  }
  if (z >= b) return v;
  const double L = b - a;
  const double w = (z - a) / L;
  const double q = 1.0 - w;
  const double w2 = w * w;
  // S(w) = w^4 (35 - 84w + 70w^2 - 20w^3)
  v.s = 1.0 - w2 * w2 * (35.0 + w * (-84.0 + w * (70.0 - 20.0 * w)));
  v.d1 = -140.0 * w2 * w * q * q * q / L;
  v.d2 = -420.0 * w2 * q * q * (1.0 - 2.0 * w) / (L * L);
  v.d3 = -840.0 * w * q * (1.0 - 5.0 * w + 5.0 * w2) / (L * L * L);
  return v;
}

std::array<double, 4> smoothing_caps(double a, double b) {
  require_interval(a, b);
  const double L = b - a;
  return {kSmoothingCaps[0], kSmoothingCaps[1] / L, kSmoothingCaps[2] / (L * L),
          kSmoothingCaps[3] / (L * L * L)};
}

CoefficientArray::CoefficientArray(std::size_t n, std::size_t T, std::vector<double> alpha)
    : n_(n), T_(T), alpha_(std::move(alpha)) {
  if (n == 0 || T == 0 || alpha_.size() != n * T) {
    std::ostringstream os;
    os << "coefficient array needs n, T >= 1 and n*T entries; got n = " << n << ", T = " << T
       << ", " << alpha_.size() << " entries";
    throw Error(ErrorKind::Configuration, os.str());
  }
  for (double v : alpha_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "coefficient array has a non-finite entry");
  }
  for (std::size_t t = 0; t < T; ++t) {
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += alpha_[i * T + t] * alpha_[i * T + t];
    if (!(norm > 0.0)) {
      throw Error(ErrorKind::DegenerateCorrelation,
                  "coefficient column " + std::to_string(t) + " is identically zero");
    }
  }
}

CoefficientArray CoefficientArray::scaled(double lambda) const {
  std::vector<double> a(alpha_);
  for (double& v : a) v *= lambda;
  return CoefficientArray(n_, T_, std::move(a));
}

CoefficientArray prime_process_coefficients(const PrimeProcess& proc, std::span<const double> ts) {
  return CoefficientArray(proc.prime_count(), ts.size(), proc.normalized_coefficients(ts));
}

std::string_view to_string(TripleMode mode) {
  return mode == TripleMode::Exact ? "exact" : "max";
}

TripleMode triple_mode_from_string(std::string_view s) {
  if (s == "exact" || s == "exact-triple") return TripleMode::Exact;
  if (s == "max" || s == "max-overestimate") return TripleMode::MaxOverestimate;
  throw Error(ErrorKind::Configuration, "unknown triple-sum mode '" + std::string(s) + "'");
}

double product_third_derivative_cap(std::size_t T, double a, double b) {
  const auto c = smoothing_caps(a, b);
  // Every other factor of the product is in [0, 1].
  double cap = c[3];
  if (T >= 2) cap = std::max(cap, c[2] * c[1]);
  if (T >= 3) cap = std::max(cap, c[1] * c[1] * c[1]);
  return cap;
}

CLTErrorReport rr_error_bound(const CoefficientArray& coeffs, double a, double b, TripleMode mode) {
  const std::size_t n = coeffs.n(), T = coeffs.T();
  if (mode == TripleMode::Exact && T > kExactTripleMaxT) {
    throw Error(ErrorKind::ResourceLimit, "exact triple sum supports T <= 64, got T = " +
                                              std::to_string(T) + "; use the max mode");
  }
  CLTErrorReport rep;
  rep.mode = mode;
  rep.third_deriv_cap = product_third_derivative_cap(T, a, b);
  double exact = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row_abs = 0.0, row_max = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
      const double v = std::abs(coeffs(i, t));
      row_abs += v;
      row_max = std::max(row_max, v);
    }
    rep.cube_sum += row_max * row_max * row_max;
    // sum_{s,t,u} |a(s) a(t) a(u)| factorizes as (sum_t |a(t)|)^3
    exact += row_abs * row_abs * row_abs;
  }
  const double Td = static_cast<double>(T);
  rep.full_triple_sum = mode == TripleMode::Exact ? exact : Td * Td * Td * rep.cube_sum;
  rep.total_error = rep.third_deriv_cap * rep.full_triple_sum / 3.0;
  return rep;
}

double triple_sum_enumerated(const CoefficientArray& coeffs) {
  const std::size_t n = coeffs.n(), T = coeffs.T();
  double total = 0.0;
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t u = 0; u < T; ++u) {
        for (std::size_t i = 0; i < n; ++i) {
          total += std::abs(coeffs(i, s) * coeffs(i, t) * coeffs(i, u));
        }
      }
    }
  }
  return total;
}

MCEstimate mc_rademacher_max_below(const CoefficientArray& coeffs, double u,
                                   std::uint64_t n_samples, std::uint64_t seed, unsigned workers) {
  const std::size_t n = coeffs.n(), T = coeffs.T();
  const std::size_t groups = (n + kGroup - 1) / kGroup;
  const bool tabulate = groups * 256 * T <= kMaxTableDoubles;
  std::vector<double> table;
  if (tabulate) {
    // table[(g*256 + mask)*T + t] = sum over rows 8g+k of (bit k ? +1 : -1) alpha(t)
    table.assign(groups * 256 * T, 0.0);
    for (std::size_t g = 0; g < groups; ++g) {
      for (std::size_t mask = 0; mask < 256; ++mask) {
        double* out = &table[(g * 256 + mask) * T];
        for (std::size_t k = 0; k < kGroup; ++k) {
          const std::size_t i = g * kGroup + k;
          if (i >= n) break;
          const double sign = (mask >> k) & 1u ? 1.0 : -1.0;
          for (std::size_t t = 0; t < T; ++t) out[t] += sign * coeffs(i, t);
        }
      }
    }
  }
  const auto hits = parallel_count(n_samples, workers, [&](std::uint64_t sample) {
    SampleStream stream(seed, sample, StreamTag::Rademacher);
    std::vector<double> x(T, 0.0);
    std::uint32_t bits = 0;
    if (tabulate) {
      for (std::size_t g = 0; g < groups; ++g) {
        if (g % 4 == 0) bits = stream.next_bits();
        const std::size_t mask = (bits >> (8 * (g % 4))) & 0xffu;
        const double* row = &table[(g * 256 + mask) * T];
        for (std::size_t t = 0; t < T; ++t) x[t] += row[t];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (i % 32 == 0) bits = stream.next_bits();
        const double sign = (bits >> (i % 32)) & 1u ? 1.0 : -1.0;
        for (std::size_t t = 0; t < T; ++t) x[t] += sign * coeffs(i, t);
      }
    }
    return *std::max_element(x.begin(), x.end()) <= u;
  });
  return MCEstimate::from_counts(hits, n_samples, seed);
}

namespace {

struct GaussianShape {
  std::vector<double> sd;
  Matrix cov;
};

GaussianShape gaussian_shape(const CoefficientArray& coeffs) {
  const std::size_t n = coeffs.n(), T = coeffs.T();
  GaussianShape g{std::vector<double>(T), Matrix(T)};
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t t = s; t < T; ++t) {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) v += coeffs(i, s) * coeffs(i, t);
      g.cov(s, t) = g.cov(t, s) = v;
    }
    g.sd[s] = std::sqrt(g.cov(s, s));
  }
  return g;
}

}  // namespace

MCEstimate mc_gaussian_max_below(const CoefficientArray& coeffs, double u, std::uint64_t n_samples,
                                 std::uint64_t seed, unsigned workers) {
  const std::size_t n = coeffs.n(), T = coeffs.T();
  const auto shape = gaussian_shape(coeffs);
  const auto corr = CorrelationMatrix::from_covariance(shape.cov);
  std::vector<double> th(T);
  for (std::size_t t = 0; t < T; ++t) th[t] = u / shape.sd[t];
  try {
    const auto factor = cholesky(corr);
    return mc_exceedance(factor, th, n_samples, seed, workers).complement();
  } catch (const NotPositiveDefiniteError&) {
    // Singular covariance (n < T, or collinear columns): sample Y = alpha^T g.
  }
  const auto hits = parallel_count(n_samples, workers, [&](std::uint64_t sample) {
    SampleStream stream(seed, sample, StreamTag::Gaussian);
    std::vector<double> y(T, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double g = stream.next_normal();
      for (std::size_t t = 0; t < T; ++t) y[t] += g * coeffs(i, t);
    }
    return *std::max_element(y.begin(), y.end()) <= u;
  });
  return MCEstimate::from_counts(hits, n_samples, seed);
}

TransferReport transfer_bound(const CoefficientArray& coeffs, double threshold_low,
                              double threshold_high, std::uint64_t n_samples, std::uint64_t seed,
                              unsigned workers) {
  if (!(threshold_low < threshold_high)) {
    throw Error(ErrorKind::Domain, "transfer_bound needs threshold_low < threshold_high");
  }
  TransferReport rep;
  rep.threshold_low = threshold_low;
  rep.threshold_high = threshold_high;
  const auto mode = coeffs.T() <= kExactTripleMaxT ? TripleMode::Exact : TripleMode::MaxOverestimate;
  rep.error = rr_error_bound(coeffs, threshold_low, threshold_high, mode);
  rep.rademacher = mc_rademacher_max_below(coeffs, threshold_low, n_samples, seed, workers);

  bool done = false;
  if (coeffs.T() <= kOrthantOracleMaxDimension) {
    const auto shape = gaussian_shape(coeffs);
    const auto corr = CorrelationMatrix::from_covariance(shape.cov);
    std::vector<double> th(coeffs.T());
    for (std::size_t t = 0; t < th.size(); ++t) th[t] = threshold_high / shape.sd[t];
    try {
      const double p = orthant_prob_oracle(corr, th);
      rep.gaussian.p_hat = p;
      rep.gaussian.ci_low = rep.gaussian.ci_high = p;
      rep.gaussian.seed = seed;
      rep.gaussian_exact = true;
      done = true;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotPositiveDefinite) throw;
    }
  }
  if (!done) rep.gaussian = mc_gaussian_max_below(coeffs, threshold_high, n_samples, seed, workers);

  rep.rhs = rep.gaussian.p_hat + rep.error.total_error;
  rep.tolerance = 4.0 * std::hypot(rep.rademacher.std_err, rep.gaussian.std_err);
  rep.holds = rep.rademacher.p_hat <= rep.rhs + rep.tolerance;
  return rep;
}

}  // namespace gptb
