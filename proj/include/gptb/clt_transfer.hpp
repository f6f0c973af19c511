#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gptb/core/monte_carlo.hpp"

namespace gptb {

class PrimeProcess;

/// Derivative caps of the smoothing polynomial on [0, 1]:
/// s = 1 - S(w), S(w) = 35w^4 - 84w^5 + 70w^6 - 20w^7.
///   |S'|   = 140 w^3 (1-w)^3                 peaks at w = 1/2:          35/16
///   |S''|  = 420 w^2 (1-w)^2 |1-2w|          peaks at w = 1/2 -+ 1/(2 sqrt 5): 84/(5 sqrt 5)
///   |S'''| = 840 w (1-w) |1 - 5w + 5w^2|     peaks at w = 1/2:          105/2
inline constexpr std::array<double, 4> kSmoothingCaps = {1.0, 35.0 / 16.0, 7.5131884043992934,
                                                         52.5};

struct SmoothingValue {
  double s = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// C^3 step from 1 (z <= a) to 0 (z >= b). Throws Domain when a >= b.
SmoothingValue smoothing_value(double z, double a, double b);

/// sup |s^{(r)}| = C_r (b-a)^{-r}, r = 0..3.
std::array<double, 4> smoothing_caps(double a, double b);

/// alpha_i(t), row-major over i (n rows, T columns).
class CoefficientArray {
 public:
  /// Throws Configuration on a shape mismatch, Domain on non-finite entries
  /// and DegenerateCorrelation on a zero column.
  CoefficientArray(std::size_t n, std::size_t T, std::vector<double> alpha);

  std::size_t n() const noexcept { return n_; }
  std::size_t T() const noexcept { return T_; }
  double operator()(std::size_t i, std::size_t t) const { return alpha_[i * T_ + t]; }
  std::span<const double> data() const noexcept { return alpha_; }

  CoefficientArray scaled(double lambda) const;

 private:
  std::size_t n_;
  std::size_t T_;
  std::vector<double> alpha_;
};

/// alpha_p(t) = cos(t log p) p^{-1/2-1/log x}/sd(t) over the primes in [y, x].
CoefficientArray prime_process_coefficients(const PrimeProcess& proc, std::span<const double> ts);

enum class TripleMode { Exact, MaxOverestimate };

std::string_view to_string(TripleMode mode);
TripleMode triple_mode_from_string(std::string_view s);

inline constexpr std::size_t kExactTripleMaxT = 64;

struct CLTErrorReport {
  double cube_sum = 0.0;         // sum_i max_t |alpha_i(t)|^3
  double full_triple_sum = 0.0;  // sum_{s,t,u} sum_i |alpha_i(s) alpha_i(t) alpha_i(u)|, or T^3 cube_sum
  double third_deriv_cap = 0.0;  // sup |d^3 h / dx_s dx_t dx_u| for h = prod_t s(x_t)
  double total_error = 0.0;      // third_deriv_cap * full_triple_sum / 3
  TripleMode mode = TripleMode::Exact;
};

/// Mixed third-partial cap of prod_t s(x_t) over the index patterns that
/// occur with T coordinates: s''' (all equal), s'' s' (two equal), s'^3 (distinct).
double product_third_derivative_cap(std::size_t T, double a, double b);

/// |E h(X) - E h(Y)| bound for the smoothed box indicator h. Exact mode needs
/// T <= 64 (ResourceLimit otherwise).
CLTErrorReport rr_error_bound(const CoefficientArray& coeffs, double a, double b, TripleMode mode);

/// Sum_{s,t,u} sum_i |alpha_i(s) alpha_i(t) alpha_i(u)| by direct T^3 enumeration.
double triple_sum_enumerated(const CoefficientArray& coeffs);

struct TransferReport {
  double threshold_low = 0.0;
  double threshold_high = 0.0;
  MCEstimate rademacher;       // P(max_t X_t <= low)
  MCEstimate gaussian;         // P(max_t Y_t <= high); std_err 0 when exact
  bool gaussian_exact = false;  // quadrature oracle (T <= 3, nonsingular)
  CLTErrorReport error;
  double rhs = 0.0;        // gaussian + total_error
  double tolerance = 0.0;  // 4 combined standard errors
  bool holds = false;      // rademacher <= rhs + tolerance
};

/// P(max X <= low) <= P(max Y <= high) + total_error, with both sides estimated.
TransferReport transfer_bound(const CoefficientArray& coeffs, double threshold_low,
                              double threshold_high, std::uint64_t n_samples = 1'000'000,
                              std::uint64_t seed = 1, unsigned workers = 0);

/// Monte Carlo P(max_t X_t <= u) for X_t = sum_i alpha_i(t) eps_i, eps Rademacher.
MCEstimate mc_rademacher_max_below(const CoefficientArray& coeffs, double u,
                                   std::uint64_t n_samples, std::uint64_t seed, unsigned workers = 0);

/// Monte Carlo P(max_t Y_t <= u) for Y_t = sum_i alpha_i(t) g_i.
MCEstimate mc_gaussian_max_below(const CoefficientArray& coeffs, double u,
                                 std::uint64_t n_samples, std::uint64_t seed, unsigned workers = 0);

}  // namespace gptb
