#include "gptb/pickands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gptb/core/special.hpp"
#include "gptb/error.hpp"
#include "gptb/tail_bounds.hpp"

namespace gptb {

namespace {

void require_shao_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0)) {
    std::ostringstream os;
    os << "Shao covariance needs 0 < alpha < 2, got " << alpha;
    throw Error(ErrorKind::Domain, os.str());
  }
}

void require_t(double t) {
  if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "covariance lag must be >= 0");
}

}  // namespace

double shao_one_minus_covariance(double alpha, double t) {
  require_shao_alpha(alpha);
  require_t(t);
  // 1 - r = (2 sinh(t/2))^a / 2 - (cosh(at/2) - 1)
  const double s = std::sinh(0.25 * alpha * t);
  return 0.5 * std::pow(2.0 * std::sinh(0.5 * t), alpha) - 2.0 * s * s;
}

double shao_covariance(double alpha, double t) {
  require_shao_alpha(alpha);
  require_t(t);
  if (t < 1.0) return 1.0 - shao_one_minus_covariance(alpha, t);
  // e^{at/2} (1 - (1 - e^{-t})^a) / 2 + e^{-at/2} / 2: no large-term cancellation.
  const double lead = -std::expm1(alpha * std::log1p(-std::exp(-t)));
  return 0.5 * std::exp(0.5 * alpha * t) * lead + 0.5 * std::exp(-0.5 * alpha * t);
}

double pickands_covariance(double alpha, double t) {
  if (alpha == 2.0) {
    require_t(t);
    return std::exp(-0.5 * t * t);
  }
  return shao_covariance(alpha, t);
}

CorrelationMatrix pickands_grid_matrix(double alpha, std::size_t M) {
  if (M < 2) throw Error(ErrorKind::Configuration, "Pickands grid needs M >= 2");
  std::vector<double> lags(M);
  for (std::size_t k = 0; k < M; ++k) {
    lags[k] = k == 0 ? 1.0 : pickands_covariance(alpha, static_cast<double>(k) / static_cast<double>(M));
  }
  auto m = CorrelationMatrix::stationary(lags, M);
  (void)cholesky(m);
  return m;
}

std::size_t pickands_grid_size(double alpha, double u, double b) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorKind::Domain, "alpha must lie in (0, 2]");
  if (!(u > 0.0) || !std::isfinite(u)) throw Error(ErrorKind::Domain, "u must be > 0");
  if (!(b >= 1.0 && b <= 10.0)) throw Error(ErrorKind::Domain, "b must lie in [1, 10]");
  const double m = std::floor(std::pow(b * u * u * alpha / 2.0, 1.0 / alpha));
  return m >= 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(m);
}

double ln_gamma(double x) {
  if (!(x > 0.0)) {
    std::ostringstream os;
    os << "ln_gamma needs x > 0, got " << x;
    throw Error(ErrorKind::Domain, os.str());
  }
  return std::lgamma(x);
}

ReferenceBounds reference_bounds(double alpha) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorKind::Domain, "alpha must lie in (0, 2]");
  const double inv = 1.0 / alpha;
  const double lg = ln_gamma(inv);
  ReferenceBounds r;
  r.conjecture = std::exp(-lg);
  if (alpha < 1.0) {
    r.shao_lower = std::pow(alpha / 4.0, inv) * (1.0 - std::exp(-inv) * (1.0 + inv));
    r.shao_upper = std::pow(alpha, inv) *
                   std::pow(2.41 * std::sqrt(8.8 - alpha * std::log(0.4 + 2.5 / alpha)) +
                                0.77 * std::sqrt(alpha),
                            2.0 * inv);
  }
  r.dmr = alpha / 8.0 * std::exp(-lg - inv * std::log(4.0));
  r.michna = 2.0 * r.dmr;
  r.corollary1_shape = std::sqrt(alpha) * std::pow(std::exp(1.0) * alpha / 2.0, inv);
  return r;
}

PickandsEvaluation pickands_lower_surrogate(double alpha, double u, const PickandsOptions& opts) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw Error(ErrorKind::Domain, "alpha must lie in (0, 2]");
  if (!(u > 0.0 && std::isfinite(u))) throw Error(ErrorKind::Domain, "u must be > 0");
  if (!(opts.a > 0.0 && std::isfinite(opts.a))) throw Error(ErrorKind::Domain, "a must be > 0");
  if (u > opts.max_u) {
    std::ostringstream os;
    os << "u = " << u << " exceeds the configured cap " << opts.max_u;
    throw Error(ErrorKind::ResourceLimit, os.str());
  }
  PickandsEvaluation ev;
  ev.alpha = alpha;
  ev.u = u;
  ev.b = opts.b;
  ev.a = opts.a;
  ev.delta = opts.delta.value_or(alpha);
  ev.M = pickands_grid_size(alpha, u, opts.b);
  ev.in_proof_regime = alpha < 1.0;
  ev.covariance = alpha == 2.0 ? "gaussian" : "shao";
  ev.references = reference_bounds(alpha);
  if (ev.M < 2) {
    std::ostringstream os;
    os << "M = " << ev.M << " < 2 at alpha = " << alpha << ", u = " << u << "; increase u";
    throw Error(ErrorKind::Configuration, os.str());
  }
  if (ev.M > opts.max_M) {
    std::ostringstream os;
    os << "M = " << ev.M << " exceeds the configured cap " << opts.max_M;
    throw Error(ErrorKind::ResourceLimit, os.str());
  }
  const std::size_t M = ev.M;
  const double Md = static_cast<double>(M);
  std::vector<double> lags(M);
  for (std::size_t k = 0; k < M; ++k) {
    lags[k] = k == 0 ? 1.0 : pickands_covariance(alpha, static_cast<double>(k) / Md);
  }
  const auto m = CorrelationMatrix::stationary(lags, M);
  if (opts.check_psd) (void)cholesky(m);

  BoundConfig cfg;
  cfg.u = u;
  cfg.H = opts.a / u;
  cfg.delta = ev.delta;
  cfg.cd_rule = CdRule::StationaryComplement;
  const auto term = pivot_infimum(m, M, cfg, cfg.H);
  ev.inf_h_value = term.inf_h_value;
  ev.B_delta = term.B_delta;

  const double log_s = std::log(Md) + std::log(opts.a) - 0.5 * u * u - opts.a -
                       opts.a * opts.a / (2.0 * u * u) - std::log(kSqrt2Pi * u) +
                       term.log_inf_h_value;
  ev.stationary_bound = std::exp(log_s);
  ev.log_finite_u_value = std::log(2.0) / alpha + (1.0 - 2.0 / alpha) * std::log(u) +
                          std::log(kSqrt2Pi) + 0.5 * u * u + log_s;
  ev.finite_u_value = std::exp(ev.log_finite_u_value);

  // Split of the product by lag M - j, per-factor minimum over the endpoints.
  double log_head = 0.0, log_tail = 0.0;
  if (term.method != "h-too-large") {
    const auto cd = cd_for_pivot(m, M, cfg);
    const auto t0 = prop2_terms(m, M, cd.c, cd.d, u, ev.delta, 0.0);
    const auto t1 = prop2_terms(m, M, cd.c, cd.d, u, ev.delta, cfg.H);
    const double cut = std::pow(Md, 0.25);
    for (std::size_t j = 0; j + 1 < M; ++j) {
      const double lag = static_cast<double>(M - 1 - j);
      const double f = std::min(t0.log_factors[j], t1.log_factors[j]);
      (lag <= cut ? log_head : log_tail) += f;
    }
    ev.head_product = std::exp(log_head);
    ev.tail_product = std::exp(log_tail);
  }
  return ev;
}

}  // namespace gptb
