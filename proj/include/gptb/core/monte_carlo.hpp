#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "gptb/core/matrix.hpp"

namespace gptb {

/// Monte-Carlo probability estimate with a 99.7% (three standard error)
/// normal-approximation interval clipped to [0, 1].
struct MCEstimate {
  double p_hat = 0.0;
  std::uint64_t n_samples = 0;
  double std_err = 0.0;
  std::uint64_t seed = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;

  static MCEstimate from_counts(std::uint64_t hits, std::uint64_t n_samples, std::uint64_t seed);

  /// Estimate of the complementary event from the same draws.
  MCEstimate complement() const;
};

/// Worker count used when callers pass 0.
unsigned default_worker_count();

/// Counts samples s in [0, n) for which `hit(s)` is true. Samples are split
/// into contiguous chunks across `workers` threads; the integer total does
/// not depend on the split.
std::uint64_t parallel_count(std::uint64_t n, unsigned workers,
                             const std::function<bool(std::uint64_t)>& hit);

/// P(Z_j > thresholds[j] for some j) with Z = L g, g drawn from the
/// per-sample Philox stream keyed on (seed, sample index).
MCEstimate mc_exceedance(const CholeskyFactor& factor, std::span<const double> thresholds,
                         std::uint64_t n_samples, std::uint64_t seed, unsigned workers = 0);

/// P(max_j Z_j > u) for Z ~ N(0, m).
MCEstimate mc_sup_tail(const CorrelationMatrix& m, double u, std::uint64_t n_samples,
                       std::uint64_t seed, unsigned workers = 0);

}  // namespace gptb
