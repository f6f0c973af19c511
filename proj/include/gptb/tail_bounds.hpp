#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gptb/core/matrix.hpp"

namespace gptb {

/// How the (c_j, d_j) sequences of the comparison step are chosen per pivot.
enum class CdRule {
  /// cfg.c / cfg.d as given. For a pivot m shorter than the full sequence the
  /// last m-1 entries are used, so lag-indexed sequences line up.
  Explicit,
  /// c_j = r_{j,m}, d_j = 1 - r_{j,m}.
  StationaryComplement,
};

std::string_view to_string(CdRule rule);
CdRule cd_rule_from_string(std::string_view s);

struct BoundConfig {
  double u = 0.0;
  double H = 0.0;
  double delta = 0.0;
  std::vector<double> c;
  std::vector<double> d;
  unsigned h_grid_points = 17;
  CdRule cd_rule = CdRule::Explicit;
};

struct CdSequences {
  std::vector<double> c;
  std::vector<double> d;
};

/// The (c, d) pair that `cfg` prescribes for a 1-based pivot.
CdSequences cd_for_pivot(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg);

/// Margins within this distance of zero are flagged as boundary cases.
inline constexpr double kCdBoundaryTolerance = 1e-12;

struct CdPairViolation {
  std::size_t j = 0;  // 1-based, j < k
  std::size_t k = 0;
  double margin = 0.0;  // r_jk - r_jm r_km - c_j d_k
  bool boundary = false;
};

struct CdValidation {
  std::size_t pivot = 0;
  bool entries_ok = true;        // c_j >= 0, d_j > 0, all finite
  bool ratio_monotone = true;    // hypothesis (i)
  bool pairs_ok = true;          // hypothesis (ii)
  bool denominators_ok = true;   // 1 - r_jm^2 - c_j d_j > 0
  std::vector<std::size_t> bad_entries;
  std::vector<std::size_t> ratio_violations;  // j with c_j/d_j > c_{j+1}/d_{j+1}
  std::vector<CdPairViolation> pair_violations;
  std::vector<std::size_t> denominator_violations;

  bool passed() const {
    return entries_ok && ratio_monotone && pairs_ok && denominators_ok;
  }
  /// Failed only through hypothesis (ii) pairs that sit on the boundary. The
  /// comparison argument needs only the non-strict inequality, so the bound
  /// evaluators accept these (with a diagnostic).
  bool passed_up_to_boundary() const;
  std::string summary() const;
};

CdValidation validate_cd(const CorrelationMatrix& m, std::size_t pivot, std::span<const double> c,
                         std::span<const double> d);

/// The pieces of the comparison-step lower bound at one h.
struct Prop2Terms {
  double B = 0.0;               // +inf when c_{m-1} = 0 (the Brownian factor is then 1)
  double log_brownian = 0.0;    // log(Phi(B) - Phi(-B))
  std::vector<double> log_factors;  // log Phi((1-delta) cap_j / sqrt(1 - r_jm^2 - c_j d_j))
  double log_value = 0.0;
};

/// Unvalidated evaluation; throws ErrorKind::HTooLarge when some cap
/// u - r_jm (u+h) is negative.
Prop2Terms prop2_terms(const CorrelationMatrix& m, std::size_t pivot, std::span<const double> c,
                       std::span<const double> d, double u, double delta, double h);

/// Lower bound on P(m, h) = P(V_j <= (u - r_jm(u+h))/sqrt(1-r_jm^2) for j < m).
/// Pivot is 1-based; pivot 1 returns 1.
double prop2_pmh_bound(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg,
                       double h);

struct PivotTerm {
  std::size_t m = 0;
  double inf_h_value = 0.0;
  double log_inf_h_value = 0.0;
  double h_at_inf = 0.0;  // NaN when the value is an envelope, not attained at one h
  double B_delta = 0.0;   // NaN for pivot 1
  std::string method;     // empty | endpoint | envelope | h-too-large
  bool cd_boundary = false;  // hypothesis (ii) held only with equality
};

/// Lower bound on inf_{0<=h<=h_max} P(pivot, h).
PivotTerm pivot_infimum(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg,
                        double h_max);

struct TailBoundResult {
  double bound = 0.0;
  double prefactor = 0.0;  // H exp(-(u+H)^2/2)/sqrt(2 pi)
  std::vector<PivotTerm> per_m;
  BoundConfig params_echo;
  std::vector<std::string> diagnostics;
};

/// Lower bound on P(max_j Z_j > u).
TailBoundResult prop1_bound(const CorrelationMatrix& m, const BoundConfig& cfg);

/// Stationary refinement: M (e^{-u^2/2}/(sqrt(2 pi) u)) a e^{-a-a^2/2u^2} inf_{h<=a/u} P(M,h),
/// a lower bound on P(max_{j<=M} Z_j > u). `r` holds lags r(0..M-1).
double stationary_prop1_bound(std::span<const double> r, std::size_t M, double u, double a,
                              const BoundConfig& cfg);

/// The fully explicit bound behind the stationary theorem: prop1_bound with
/// H = 1/u, delta = min{u^-2, sqrt(r(1)/(u^2(1-r(1))))}, c_j = r(m-j), d_j = 1 - r(m-j).
TailBoundResult theorem1_bound(std::span<const double> r, std::size_t n, double u);

/// Upper bound on P(X <= u) - P(W <= u) for covX = (r1), covW = (r0).
double comparison_bound(const CorrelationMatrix& covX, const CorrelationMatrix& covW,
                        std::span<const double> thresholds, int variant);

struct SlepianVerdict {
  double p_x = 0.0;
  double p_w = 0.0;
  double tolerance = 0.0;
  bool oracle = true;
  bool equal_matrices = false;
  bool holds = false;
};

/// Checks P(X <= u) <= P(W <= u) when covX <= covW entrywise; exact for
/// n <= 3, Monte Carlo (common seed, 4 combined standard errors) above.
SlepianVerdict slepian_check(const CorrelationMatrix& covX, const CorrelationMatrix& covW,
                             std::span<const double> thresholds,
                             std::uint64_t n_samples = 1'000'000, std::uint64_t seed = 1);

}  // namespace gptb
