#include "gptb/tail_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gptb/core/monte_carlo.hpp"
#include "gptb/core/orthant.hpp"
#include "gptb/core/quadrature.hpp"
#include "gptb/core/special.hpp"
#include "gptb/error.hpp"

namespace gptb {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_pivot(const CorrelationMatrix& m, std::size_t pivot) {
  if (pivot < 1 || pivot > m.size()) {
    std::ostringstream os;
    os << "pivot " << pivot << " outside 1.." << m.size();
    throw Error(ErrorKind::Configuration, os.str());
  }
}

void require_finite_nonneg(double v, const char* name) {
  if (!(std::isfinite(v) && v >= 0.0)) {
    std::ostringstream os;
    os << name << " must be finite and >= 0, got " << v;
    throw Error(ErrorKind::Domain, os.str());
  }
}

void require_stationary_lags(std::span<const double> r, std::size_t n) {
  if (r.size() < n || r.empty()) {
    std::ostringstream os;
    os << "need " << n << " correlation lags, got " << r.size();
    throw Error(ErrorKind::Configuration, os.str());
  }
  if (r[0] != 1.0) throw Error(ErrorKind::Domain, "stationary correlation needs r(0) = 1");
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (!(r[k] >= 0.0 && r[k] <= r[k - 1])) {
      std::ostringstream os;
      os << "r must be nonincreasing and nonnegative; r(" << k << ") = " << r[k];
      throw Error(ErrorKind::Hypothesis, os.str());
    }
  }
}

// u - r_jm (u + h) for j < pivot (all 0-based internally).
std::vector<double> caps(const CorrelationMatrix& m, std::size_t pivot, double u, double h) {
  const std::size_t col = pivot - 1;
  std::vector<double> out(col);
  for (std::size_t j = 0; j < col; ++j) out[j] = u - m(j, col) * (u + h);
  return out;
}

}  // namespace

std::string_view to_string(CdRule rule) {
  return rule == CdRule::Explicit ? "explicit" : "stationary-complement";
}

CdRule cd_rule_from_string(std::string_view s) {
  if (s == "explicit") return CdRule::Explicit;
  if (s == "stationary-complement") return CdRule::StationaryComplement;
  throw Error(ErrorKind::Configuration, "unknown cd_rule '" + std::string(s) + "'");
}

CdSequences cd_for_pivot(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg) {
  require_pivot(m, pivot);
  const std::size_t len = pivot - 1;
  CdSequences out;
  if (cfg.cd_rule == CdRule::StationaryComplement) {
    out.c.resize(len);
    out.d.resize(len);
    for (std::size_t j = 0; j < len; ++j) {
      out.c[j] = m(j, len);
      out.d[j] = 1.0 - m(j, len);
    }
    return out;
  }
  if (cfg.c.size() != cfg.d.size()) {
    std::ostringstream os;
    os << "c has " << cfg.c.size() << " entries but d has " << cfg.d.size();
    throw Error(ErrorKind::Configuration, os.str());
  }
  if (cfg.c.size() < len) {
    std::ostringstream os;
    os << "pivot " << pivot << " needs " << len << " (c, d) entries, got " << cfg.c.size();
    throw Error(ErrorKind::Configuration, os.str());
  }
  const std::size_t off = cfg.c.size() - len;
  out.c.assign(cfg.c.begin() + static_cast<std::ptrdiff_t>(off), cfg.c.end());
  out.d.assign(cfg.d.begin() + static_cast<std::ptrdiff_t>(off), cfg.d.end());
  return out;
}

bool CdValidation::passed_up_to_boundary() const {
  if (!(entries_ok && ratio_monotone && denominators_ok)) return false;
  return std::all_of(pair_violations.begin(), pair_violations.end(),
                     [](const CdPairViolation& v) { return v.boundary; });
}

std::string CdValidation::summary() const {
  std::ostringstream os;
  os << "pivot " << pivot << ":";
  if (passed()) {
    os << " ok";
    return os.str();
  }
  constexpr std::size_t kShow = 8;
  if (!entries_ok) {
    os << " need c_j >= 0, d_j > 0 at j =";
    for (std::size_t i = 0; i < std::min(kShow, bad_entries.size()); ++i) os << ' ' << bad_entries[i];
  }
  if (!ratio_monotone) {
    os << " c_j/d_j decreases after j =";
    for (std::size_t i = 0; i < std::min(kShow, ratio_violations.size()); ++i)
      os << ' ' << ratio_violations[i];
  }
  if (!denominators_ok) {
    os << " 1 - r_jm^2 - c_j d_j <= 0 at j =";
    for (std::size_t i = 0; i < std::min(kShow, denominator_violations.size()); ++i)
      os << ' ' << denominator_violations[i];
  }
  if (!pairs_ok) {
    os << " c_min d_max not below r_jk - r_jm r_km at";
    for (std::size_t i = 0; i < std::min(kShow, pair_violations.size()); ++i) {
      const auto& v = pair_violations[i];
      os << " (" << v.j << ',' << v.k << "; margin " << v.margin << (v.boundary ? ", boundary" : "")
         << ')';
    }
  }
  const std::size_t total = bad_entries.size() + ratio_violations.size() +
                            denominator_violations.size() + pair_violations.size();
  if (total > kShow) os << " [" << total << " violations in all]";
  return os.str();
}

CdValidation validate_cd(const CorrelationMatrix& m, std::size_t pivot, std::span<const double> c,
                         std::span<const double> d) {
  require_pivot(m, pivot);
  const std::size_t len = pivot - 1;
  if (c.size() != len || d.size() != len) {
    std::ostringstream os;
    os << "pivot " << pivot << " needs c, d of length " << len << ", got " << c.size() << " and "
       << d.size();
    throw Error(ErrorKind::Configuration, os.str());
  }
  CdValidation v;
  v.pivot = pivot;
  for (std::size_t j = 0; j < len; ++j) {
    if (!(std::isfinite(c[j]) && std::isfinite(d[j]) && c[j] >= 0.0 && d[j] > 0.0)) {
      v.entries_ok = false;
      v.bad_entries.push_back(j + 1);
    }
  }
  if (!v.entries_ok) return v;

  for (std::size_t j = 0; j + 1 < len; ++j) {
    // c_j/d_j <= c_{j+1}/d_{j+1}, cross-multiplied (d > 0).
    const double lhs = c[j] * d[j + 1];
    const double rhs = c[j + 1] * d[j];
    if (lhs > rhs + 4 * std::numeric_limits<double>::epsilon() * std::max(lhs, rhs)) {
      v.ratio_monotone = false;
      v.ratio_violations.push_back(j + 1);
    }
  }
  const std::size_t col = len;
  for (std::size_t j = 0; j < len; ++j) {
    const double r = m(j, col);
    if (!(1.0 - r * r - c[j] * d[j] > 0.0)) {
      v.denominators_ok = false;
      v.denominator_violations.push_back(j + 1);
    }
  }
  for (std::size_t j = 0; j < len; ++j) {
    const double rjm = m(j, col);
    const double cj = c[j];
    const auto row = m.matrix().row(j);
    for (std::size_t k = j + 1; k < len; ++k) {
      const double margin = row[k] - rjm * m(k, col) - cj * d[k];
      if (margin <= kCdBoundaryTolerance) {
        v.pairs_ok = false;
        v.pair_violations.push_back({j + 1, k + 1, margin, margin >= -kCdBoundaryTolerance});
      }
    }
  }
  return v;
}

Prop2Terms prop2_terms(const CorrelationMatrix& m, std::size_t pivot, std::span<const double> c,
                       std::span<const double> d, double u, double delta, double h) {
  require_pivot(m, pivot);
  const std::size_t len = pivot - 1;
  if (c.size() != len || d.size() != len) {
    throw Error(ErrorKind::Configuration, "c, d length does not match pivot - 1");
  }
  Prop2Terms t;
  t.B = kInf;
  if (len == 0) return t;

  const auto cap = caps(m, pivot, u, h);
  for (std::size_t j = 0; j < len; ++j) {
    if (cap[j] < 0.0) {
      std::ostringstream os;
      os << "h = " << h << " makes the cap on V_" << j + 1 << " negative (" << cap[j]
         << "); pivot " << pivot;
      throw Error(ErrorKind::HTooLarge, os.str());
    }
  }
  t.log_factors.resize(len);
  double min_ratio = kInf;
  for (std::size_t j = 0; j < len; ++j) {
    const double r = m(j, len);
    const double den = 1.0 - r * r - c[j] * d[j];
    if (!(den > 0.0)) {
      std::ostringstream os;
      os << "1 - r^2 - c d = " << den << " at j = " << j + 1 << ", pivot " << pivot;
      throw Error(ErrorKind::Configuration, os.str());
    }
    t.log_factors[j] = log_std_normal_cdf((1.0 - delta) * cap[j] / std::sqrt(den));
    min_ratio = std::min(min_ratio, cap[j] / d[j]);
  }
  const double c_last = c[len - 1];
  if (c_last < 0.0) throw Error(ErrorKind::Configuration, "B(delta) undefined: c_{m-1} < 0");
  if (c_last > 0.0) {
    // c_{m-1} = 0 forces every c_j = 0: the Brownian part vanishes and its
    // factor is 1 (the B -> infinity limit).
    t.B = delta * std::sqrt(d[len - 1] / c_last) * min_ratio;
    t.log_brownian = std::log(std::erf(t.B / std::sqrt(2.0)));
  }
  double s = t.log_brownian;
  for (double f : t.log_factors) s += f;
  t.log_value = s;
  return t;
}

namespace {

CdValidation checked_cd(const CorrelationMatrix& m, std::size_t pivot, const CdSequences& cd) {
  auto v = validate_cd(m, pivot, cd.c, cd.d);
  if (!v.passed_up_to_boundary()) throw Error(ErrorKind::Configuration, v.summary());
  return v;
}

void check_config(const BoundConfig& cfg) {
  require_finite_nonneg(cfg.u, "u");
  require_finite_nonneg(cfg.H, "H");
  require_finite_nonneg(cfg.delta, "delta");
  if (cfg.h_grid_points == 0) throw Error(ErrorKind::Configuration, "h_grid_points must be >= 1");
}

}  // namespace

double prop2_pmh_bound(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg,
                       double h) {
  check_config(cfg);
  require_finite_nonneg(h, "h");
  require_pivot(m, pivot);
  if (pivot == 1) return 1.0;
  const auto cd = cd_for_pivot(m, pivot, cfg);
  checked_cd(m, pivot, cd);
  return std::exp(prop2_terms(m, pivot, cd.c, cd.d, cfg.u, cfg.delta, h).log_value);
}

PivotTerm pivot_infimum(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& cfg,
                        double h_max) {
  check_config(cfg);
  require_finite_nonneg(h_max, "h_max");
  require_pivot(m, pivot);
  PivotTerm term;
  term.m = pivot;
  if (pivot == 1) {
    term.inf_h_value = 1.0;
    term.log_inf_h_value = 0.0;
    term.h_at_inf = 0.0;
    term.B_delta = kNaN;
    term.method = "empty";
    return term;
  }
  const auto cd = cd_for_pivot(m, pivot, cfg);
  term.cd_boundary = !checked_cd(m, pivot, cd).passed();

  const std::size_t col = pivot - 1;
  bool all_nonneg = true;
  for (std::size_t j = 0; j < col; ++j) all_nonneg = all_nonneg && m(j, col) >= 0.0;

  // Caps are linear in h, so nonnegative on [0, h_max] iff at both ends.
  const auto cap0 = caps(m, pivot, cfg.u, 0.0);
  const auto cap1 = caps(m, pivot, cfg.u, h_max);
  const bool feasible = std::all_of(cap0.begin(), cap0.end(), [](double x) { return x >= 0.0; }) &&
                        std::all_of(cap1.begin(), cap1.end(), [](double x) { return x >= 0.0; });
  if (!feasible) {
    // P(m, h) >= 0 is all that is available here.
    term.inf_h_value = 0.0;
    term.log_inf_h_value = -kInf;
    term.h_at_inf = kNaN;
    term.B_delta = kNaN;
    term.method = "h-too-large";
    return term;
  }

  auto at = [&](double h) { return prop2_terms(m, pivot, cd.c, cd.d, cfg.u, cfg.delta, h); };

  if (all_nonneg && cfg.delta <= 1.0) {
    // Every factor is nonincreasing in h: the infimum sits at h_max.
    const auto t = at(h_max);
    term.log_inf_h_value = t.log_value;
    term.inf_h_value = std::exp(t.log_value);
    term.h_at_inf = h_max;
    term.B_delta = t.B;
    term.method = "endpoint";
    return term;
  }

  // Each factor is monotone in h and B(delta) is a minimum of linear
  // functions of h, so endpoint-wise minima give a lower bound valid on the
  // whole interval. The grid minimum can only be larger; it is kept so the
  // reported h points at where the grid attains its lowest value.
  const auto t0 = at(0.0);
  const auto t1 = at(h_max);
  double log_env = std::min(t0.log_brownian, t1.log_brownian);
  for (std::size_t j = 0; j < col; ++j) log_env += std::min(t0.log_factors[j], t1.log_factors[j]);

  double grid_min = kInf;
  double grid_h = 0.0;
  const unsigned pts = std::max(2u, cfg.h_grid_points);
  for (unsigned i = 0; i < pts; ++i) {
    const double h = h_max * static_cast<double>(i) / static_cast<double>(pts - 1);
    const double lv = at(h).log_value;
    if (lv < grid_min) {
      grid_min = lv;
      grid_h = h;
    }
  }
  term.B_delta = std::min(t0.B, t1.B);
  if (grid_min <= log_env) {
    term.log_inf_h_value = grid_min;
    term.h_at_inf = grid_h;
    term.method = "endpoint";
  } else {
    term.log_inf_h_value = log_env;
    term.h_at_inf = kNaN;
    term.method = "envelope";
  }
  term.inf_h_value = std::exp(term.log_inf_h_value);
  return term;
}

TailBoundResult prop1_bound(const CorrelationMatrix& m, const BoundConfig& cfg) {
  check_config(cfg);
  if (m.size() == 0) throw Error(ErrorKind::Configuration, "empty correlation matrix");
  if (m.has_repeated_variables()) {
    throw Error(ErrorKind::RepeatedVariable, "some off-diagonal |r_jk| = 1");
  }
  TailBoundResult res;
  res.params_echo = cfg;
  res.prefactor = cfg.H * std::exp(-0.5 * (cfg.u + cfg.H) * (cfg.u + cfg.H)) * kInvSqrt2Pi;
  res.per_m.reserve(m.size());
  double sum = 0.0;
  for (std::size_t p = 1; p <= m.size(); ++p) {
    auto term = pivot_infimum(m, p, cfg, cfg.H);
    if (term.method == "h-too-large") {
      res.diagnostics.push_back("pivot " + std::to_string(p) +
                                ": some cap u - r_jm(u+h) < 0 on [0, H]; term set to 0");
    }
    if (term.cd_boundary) {
      res.diagnostics.push_back("pivot " + std::to_string(p) +
                                ": hypothesis (ii) holds only with equality for some pair");
    }
    sum += term.inf_h_value;
    res.per_m.push_back(std::move(term));
  }
  const double raw = res.prefactor * sum;
  res.bound = std::clamp(raw, 0.0, 1.0);
  if (std::abs(res.bound - raw) > 1e-12) {
    std::ostringstream os;
    os << "bound clamped from " << raw << " to [0, 1]";
    res.diagnostics.push_back(os.str());
  }
  return res;
}

double stationary_prop1_bound(std::span<const double> r, std::size_t M, double u, double a,
                              const BoundConfig& cfg) {
  if (M == 0) throw Error(ErrorKind::Configuration, "M must be >= 1");
  require_stationary_lags(r, M);
  if (!(std::isfinite(u) && u > 0.0)) throw Error(ErrorKind::Domain, "u must be > 0");
  if (!(std::isfinite(a) && a > 0.0)) throw Error(ErrorKind::Domain, "a must be > 0");
  const auto mat = CorrelationMatrix::stationary(r, M);
  if (mat.has_repeated_variables()) {
    throw Error(ErrorKind::RepeatedVariable, "some lag has r(k) = 1");
  }
  BoundConfig c = cfg;
  c.u = u;
  c.H = a / u;
  const auto term = pivot_infimum(mat, M, c, c.H);
  const double log_pref = std::log(static_cast<double>(M)) + std::log(a) - 0.5 * u * u - a -
                          a * a / (2.0 * u * u) - std::log(kSqrt2Pi * u);
  const double v = std::exp(log_pref + term.log_inf_h_value);
  return std::clamp(v, 0.0, 1.0);
}

TailBoundResult theorem1_bound(std::span<const double> r, std::size_t n, double u) {
  if (n == 0) throw Error(ErrorKind::Configuration, "n must be >= 1");
  require_stationary_lags(r, n);
  if (!(std::isfinite(u) && u >= 1.0)) {
    throw Error(ErrorKind::Hypothesis, "the stationary theorem needs u >= 1");
  }
  const double r1 = r.size() > 1 ? r[1] : 0.0;
  if (r1 * (1.0 + 2.0 / (u * u)) > 1.0) {
    std::ostringstream os;
    os << "hypothesis r(1)(1 + 2u^-2) <= 1 fails: r(1) = " << r1 << ", u = " << u;
    throw Error(ErrorKind::Hypothesis, os.str());
  }
  BoundConfig cfg;
  cfg.u = u;
  cfg.H = 1.0 / u;
  cfg.delta = std::min(1.0 / (u * u), std::sqrt(r1 / (u * u * (1.0 - r1))));
  cfg.cd_rule = CdRule::StationaryComplement;
  return prop1_bound(CorrelationMatrix::stationary(r, n), cfg);
}

double comparison_bound(const CorrelationMatrix& covX, const CorrelationMatrix& covW,
                        std::span<const double> thresholds, int variant) {
  const std::size_t n = covX.size();
  if (covW.size() != n || thresholds.size() != n) {
    throw Error(ErrorKind::Configuration, "comparison_bound: dimension mismatch");
  }
  if (variant < 1 || variant > 3) {
    throw Error(ErrorKind::Configuration, "comparison_bound variant must be 1, 2 or 3");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r1 = covX(i, j);
      const double r0 = covW(i, j);
      if (!(r1 > r0)) continue;
      const double s2 = thresholds[i] * thresholds[i] + thresholds[j] * thresholds[j];
      const double K = 0.5 * s2;
      const double rmax = std::max(std::abs(r1), std::abs(r0));
      if (!std::isfinite(K)) continue;  // an infinite threshold kills the pair
      switch (variant) {
        case 1: {
          // t = sin(theta) removes the (1 - t^2)^{-1/2} endpoint singularity.
          auto f = [K](double th) { return std::exp(-K / (1.0 + std::abs(std::sin(th)))); };
          total += integrate(f, std::asin(r0), std::asin(r1), {0.0}, 1e-13, 18, 1e-17) / (2.0 * kPi);
          break;
        }
        case 2:
          total += (std::asin(r1) - std::asin(r0)) * std::exp(-K / (1.0 + rmax)) / (2.0 * kPi);
          break;
        default: {
          if (rmax >= 1.0) {
            throw Error(ErrorKind::DegenerateCorrelation,
                        "variant 3 needs max |r| < 1 on every compared pair");
          }
          if (s2 == 0.0) {
            throw Error(ErrorKind::Domain, "variant 3 divides by u_i^2 + u_j^2 = 0");
          }
          total += 2.0 / kPi * std::pow(1.0 + rmax, 1.5) / (s2 * std::sqrt(1.0 - rmax)) *
                   std::exp(-K / (1.0 + rmax));
        }
      }
    }
  }
  return total;
}

SlepianVerdict slepian_check(const CorrelationMatrix& covX, const CorrelationMatrix& covW,
                             std::span<const double> thresholds, std::uint64_t n_samples,
                             std::uint64_t seed) {
  const std::size_t n = covX.size();
  if (covW.size() != n || thresholds.size() != n) {
    throw Error(ErrorKind::Configuration, "slepian_check: dimension mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (covX(i, j) > covW(i, j)) {
        std::ostringstream os;
        os << "Slepian ordering needs r1 <= r0 entrywise; fails at (" << i + 1 << ',' << j + 1
           << "): " << covX(i, j) << " > " << covW(i, j);
        throw Error(ErrorKind::Hypothesis, os.str());
      }
    }
  }
  SlepianVerdict v;
  v.equal_matrices = covX.matrix() == covW.matrix();
  if (n <= kOrthantOracleMaxDimension) {
    v.oracle = true;
    v.p_x = orthant_prob_oracle(covX, thresholds);
    v.p_w = orthant_prob_oracle(covW, thresholds);
    v.tolerance = 1e-8;
  } else {
    v.oracle = false;
    const auto ex = mc_exceedance(cholesky(covX), thresholds, n_samples, seed).complement();
    const auto ew = mc_exceedance(cholesky(covW), thresholds, n_samples, seed).complement();
    v.p_x = ex.p_hat;
    v.p_w = ew.p_hat;
    v.tolerance = 4.0 * std::hypot(ex.std_err, ew.std_err) + 1e-12;
  }
  v.holds = v.p_x <= v.p_w + v.tolerance;
  return v;
}

}  // namespace gptb
