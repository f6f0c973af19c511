#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "gptb/core/matrix.hpp"

namespace gptb {

/// Shao's stationary covariance
///   r(t) = (e^{at/2} + e^{-at/2} - (e^{t/2} - e^{-t/2})^a) / 2,  0 < a < 2.
double shao_covariance(double alpha, double t);

/// 1 - r(t) without the cancellation near t = 0.
double shao_one_minus_covariance(double alpha, double t);

/// Covariance on the Pickands grid: Shao's for 0 < alpha < 2. At alpha = 2
/// Shao's formula collapses to r = 1, so exp(-t^2/2) (same 1 - t^2/2 local
/// behaviour) is used instead.
double pickands_covariance(double alpha, double t);

/// r_jk = pickands_covariance(alpha, |j-k|/M); validated by Cholesky.
CorrelationMatrix pickands_grid_matrix(double alpha, std::size_t M);

/// M = floor((b u^2 alpha / 2)^{1/alpha}).
std::size_t pickands_grid_size(double alpha, double u, double b);

/// log Gamma(x), x > 0.
double ln_gamma(double x);

struct ReferenceBounds {
  double conjecture = 0.0;        // 1/Gamma(1/alpha)
  std::optional<double> shao_lower;  // 0 < alpha < 1 only
  std::optional<double> shao_upper;  // 0 < alpha < 1 only
  double dmr = 0.0;               // alpha/(8 Gamma(1/alpha)) (1/4)^{1/alpha}
  double michna = 0.0;            // 2 dmr
  double corollary1_shape = 0.0;  // sqrt(alpha) (e alpha/2)^{1/alpha}, constant-free
};

ReferenceBounds reference_bounds(double alpha);

struct PickandsOptions {
  double b = 1.3591409142295225;  // e/2
  double a = 1.0;
  std::optional<double> delta;  // defaults to alpha
  std::size_t max_M = 4096;
  double max_u = 8.0;
  bool check_psd = true;
};

struct PickandsEvaluation {
  double alpha = 0.0;
  double u = 0.0;
  std::size_t M = 0;
  double b = 0.0;
  double a = 0.0;
  double delta = 0.0;
  double finite_u_value = 0.0;
  double log_finite_u_value = 0.0;
  double stationary_bound = 0.0;  // lower bound on P(max over the grid > u)
  double inf_h_value = 0.0;       // lower bound on inf_{h <= a/u} P(M, h)
  double B_delta = 0.0;
  double head_product = 0.0;  // product factors with lag <= M^{1/4}
  double tail_product = 0.0;  // product factors with lag > M^{1/4}
  bool in_proof_regime = false;  // alpha < 1; the surrogate is still evaluated otherwise
  std::string covariance;        // "shao" or "gaussian"
  ReferenceBounds references;
};

/// 2^{1/alpha} u^{1-2/alpha} sqrt(2 pi) e^{u^2/2} S, with S the stationary
/// refinement of the conditioning step on the grid t_i = i/M (pivot M,
/// c_j = r((M-j)/M), d_j = 1 - c_j), evaluated in the log domain.
PickandsEvaluation pickands_lower_surrogate(double alpha, double u,
                                            const PickandsOptions& opts = {});

}  // namespace gptb
