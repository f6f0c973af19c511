#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gptb/core/matrix.hpp"
#include "gptb/core/monte_carlo.hpp"
#include "gptb/tail_bounds.hpp"

namespace gptb {

/// Default memory budget for sieve_primes (the prime list plus one segment).
inline constexpr std::size_t kDefaultSieveBudgetBytes = std::size_t{1} << 30;

/// All primes <= limit, ascending, by a segmented sieve of Eratosthenes.
/// Throws Domain for limit < 2 and ResourceLimit when the estimated memory
/// exceeds `max_bytes` or limit >= 2^32.
std::vector<std::uint32_t> sieve_primes(double limit,
                                        std::size_t max_bytes = kDefaultSieveBudgetBytes);

/// Largest total matrix dimension for block constructions: GPTB_MATRIX_CAP
/// when set to a positive integer, else 4096.
std::size_t matrix_dimension_cap();

struct PrimeProcessConfig {
  double x = 1e6;
  std::optional<double> y;  // default log^8 x, or log x when log^8 x > x
  std::optional<double> E;  // default sqrt(loglog x)
  double K = 2.0;
  std::optional<std::size_t> M;  // default floor(log x / (K E log y)), raised when < 2
  std::size_t block_n = 0;
  std::optional<std::size_t> B;  // default floor((loglog x)^2)
};

/// Every parameter after defaults, with notes on what was adjusted.
struct ResolvedPrimeConfig {
  double x = 0.0;
  double y = 0.0;
  double E = 0.0;
  double K = 0.0;
  std::size_t M = 0;
  std::size_t block_n = 0;
  std::size_t B = 0;
  double log_x = 0.0;
  double loglog_x = 0.0;
  double loglog_y = 0.0;
  double gap = 0.0;  // loglog x - loglog y
  double M_formula = 0.0;  // log x / (K E log y) before flooring
  std::size_t M_grid_limit = 0;  // floor(log x / E): keeps T_n inside [2n+1, 2n+2]
  std::size_t largest_admissible_M = 0;  // min exact correlation in T_0 >= 1/loglog x
  bool K_check_passed = false;  // the resolved M is admissible
  bool y_fallback = false;
  bool M_raised = false;
  bool in_proof_regime = true;
  std::vector<std::string> notes;
};

enum class SumOrder { Ascending, Descending };

/// The process Z_y(t) = sum_{y<=p<=x} g_p cos(t log p)/p^{1/2+1/log x}, normalized,
/// with its primes sieved once.
class PrimeProcess {
 public:
  explicit PrimeProcess(const PrimeProcessConfig& cfg);

  const ResolvedPrimeConfig& config() const noexcept { return rc_; }
  std::size_t prime_count() const noexcept { return primes_.size(); }
  std::span<const std::uint32_t> primes() const noexcept { return primes_; }

  /// Sum_{y<=p<=x} cos(a log p)/p^{1+2/log x}, compensated.
  double cosine_sum(double a, SumOrder order = SumOrder::Ascending) const;

  /// Unnormalized covariance (1/2) sum (cos((t+s) log p) + cos((t-s) log p))/p^{1+2/log x}.
  double exact_covariance(double t, double s, SumOrder order = SumOrder::Ascending) const;
  double exact_correlation(double t, double s) const;

  /// log(1/(|t-s| log y))/(loglog x - loglog y) clamped to [-1, 1]; 1 when t = s.
  double approx_correlation(double t, double s) const;

  /// t_i = 2n+1 + i E/log x, i = 1..M.
  std::vector<double> grid(std::size_t n) const;
  /// The grids of blocks 0..B concatenated.
  std::vector<double> all_grids() const;

  CorrelationMatrix exact_matrix(std::span<const double> ts) const;

  /// Sum_{p<y} 1/(2 p^{1+2/log x}), the small-prime variance.
  double small_prime_variance() const;

  /// Normalized Rademacher sums at `ts` for one draw of f(p), keyed on
  /// (seed, sample). `forced_sign` replaces the draw with a constant sign.
  std::vector<double> rademacher_sample(std::span<const double> ts, std::uint64_t seed,
                                        std::uint64_t sample = 0,
                                        std::optional<int> forced_sign = std::nullopt) const;

  /// alpha_p(t) = cos(t log p)/p^{1/2+1/log x} / sd(t), row-major over primes
  /// in [y, x] (n_primes x ts.size()).
  std::vector<double> normalized_coefficients(std::span<const double> ts) const;

 private:
  void resolve_M(const PrimeProcessConfig& cfg);

  ResolvedPrimeConfig rc_;
  std::vector<std::uint32_t> primes_;  // y <= p <= x
  std::vector<double> log_p_;
  std::vector<double> weight_;  // p^{-1-2/log x}
  std::vector<std::uint32_t> small_primes_;  // p < y
};

struct ProcessCovarianceReport {
  std::vector<double> grid;
  CorrelationMatrix exact = CorrelationMatrix::identity(1);
  CorrelationMatrix approx = CorrelationMatrix::identity(1);
  double max_residual = 0.0;
  double loglog_x_minus_loglog_y = 0.0;
};

/// Exact and approximate correlation matrices on the block grid T_{block_n}.
ProcessCovarianceReport build_block_matrix(const PrimeProcess& proc);

/// How the comparison sequences for one pivot of the Halasz instance were obtained.
struct HalaszPivotRule {
  std::size_t m = 0;
  std::string rule;  // explicit | stationary-complement | zero-c | trivial
  std::string explicit_failure;  // validate_cd summary when the explicit choice failed
};

struct HalaszResult {
  TailBoundResult result;
  std::vector<HalaszPivotRule> rules;
  double shape_scalar = 0.0;  // bound (loglog x)^2 / sqrt(logloglog x)
};

/// The conditioning bound on P(max_{t in T_n} Z_y(t) > u) with u = sqrt(2(loglog x - loglog y)),
/// H = 1/u, delta = 1/loglog x, c_j = max(0, 1 - log((m-j)E)/gap), d_j = 1 - c_j,
/// evaluated on the exact matrix.
HalaszResult halasz_bound_instance(const PrimeProcess& proc);

struct DecouplingReport {
  double value = 0.0;     // variant 2, max of the two one-sided sums
  double variant1 = 0.0;  // same with variant 1
  double u = 0.0;
  std::size_t dimension = 0;
  double asymptotic_shape = 0.0;  // (B log B/log y + B^3 e^{-sqrt(log y)})/(loglog x)^2, d = 1
};

/// Bound on |P(max over all blocks <= u) - prod_n P(max over T_n <= u)| by the
/// comparison inequality, exact cross-block correlations against zero.
DecouplingReport block_decoupling_error(const PrimeProcess& proc);

struct Corollary2Report {
  double u = 0.0;
  std::size_t dimension = 0;
  MCEstimate mc_all_below;       // P(max over all blocks <= u)
  std::vector<double> block_bounds;  // Halasz bound per block
  double product_of_complements = 0.0;
  double decoupling = 0.0;
  double analytic_upper = 0.0;  // upper bound on P(max <= u), clipped to 1
  double small_prime_variance = 0.0;
  double chebyshev_threshold = 0.0;  // (logloglog x)^{3/4}
  bool sound = false;  // mc P(max <= u) <= analytic_upper + 4 std_err
};

Corollary2Report corollary2_experiment(const PrimeProcess& proc, std::uint64_t n_samples,
                                       std::uint64_t seed, unsigned workers = 0);

}  // namespace gptb
