#include "gptb/prime_process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "gptb/core/philox.hpp"
#include "gptb/core/special.hpp"
#include "gptb/core/summation.hpp"
#include "gptb/error.hpp"

namespace gptb {

namespace {

constexpr std::size_t kSegmentBytes = std::size_t{1} << 18;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::uint32_t> sieve_primes(double limit, std::size_t max_bytes) {
  if (!(limit >= 2.0) || !std::isfinite(limit)) {
    throw Error(ErrorKind::Domain, "sieve_primes needs a finite limit >= 2");
  }
  if (limit >= 4294967296.0) {
    throw Error(ErrorKind::ResourceLimit, "sieve_primes: limit must be below 2^32");
  }
  const auto n = static_cast<std::uint64_t>(std::floor(limit));
  // pi(n) < 1.26 n / log n for n > 1
  const double est_count = 1.26 * static_cast<double>(n) / std::log(static_cast<double>(std::max<std::uint64_t>(n, 3))) + 16.0;
  const double est_bytes = est_count * sizeof(std::uint32_t) + kSegmentBytes;
  if (est_bytes > static_cast<double>(max_bytes)) {
    std::ostringstream os;
    os << "sieve_primes(" << limit << ") needs about " << est_bytes << " bytes, budget is "
       << max_bytes;
    throw Error(ErrorKind::ResourceLimit, os.str());
  }

  // Base primes up to sqrt(n) by a plain sieve.
  const auto root = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n))) + 1;
  std::vector<char> small(root + 1, 1);
  std::vector<std::uint32_t> base;
  for (std::uint64_t i = 2; i <= root; ++i) {
    if (!small[i]) continue;
    base.push_back(static_cast<std::uint32_t>(i));
    for (std::uint64_t k = i * i; k <= root; k += i) small[k] = 0;
  }

  std::vector<std::uint32_t> out;
  out.reserve(static_cast<std::size_t>(est_count));
  std::vector<char> seg(kSegmentBytes);
  for (std::uint64_t lo = 2; lo <= n; lo += kSegmentBytes) {
    const std::uint64_t hi = std::min<std::uint64_t>(lo + kSegmentBytes - 1, n);
    std::fill(seg.begin(), seg.end(), 1);
    for (std::uint64_t p : base) {
      if (p * p > hi) break;
      std::uint64_t start = std::max(p * p, (lo + p - 1) / p * p);
      for (std::uint64_t k = start; k <= hi; k += p) seg[k - lo] = 0;
    }
    for (std::uint64_t k = lo; k <= hi; ++k) {
      if (seg[k - lo]) out.push_back(static_cast<std::uint32_t>(k));
    }
  }
  return out;
}

std::size_t matrix_dimension_cap() {
  if (const char* env = std::getenv("GPTB_MATRIX_CAP")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return 4096;
}

PrimeProcess::PrimeProcess(const PrimeProcessConfig& cfg) {
  if (!(cfg.x >= 100.0) || !std::isfinite(cfg.x)) {
    throw Error(ErrorKind::Domain, "prime process needs a finite x >= 100");
  }
  if (!(cfg.K > 0.0) || !std::isfinite(cfg.K)) throw Error(ErrorKind::Domain, "K must be > 0");
  rc_.x = cfg.x;
  rc_.K = cfg.K;
  rc_.block_n = cfg.block_n;
  rc_.log_x = std::log(cfg.x);
  rc_.loglog_x = std::log(rc_.log_x);

  if (cfg.y) {
    rc_.y = *cfg.y;
    if (!(rc_.y >= rc_.log_x)) {
      throw Error(ErrorKind::Configuration, "y must be >= log x, got " + fmt(rc_.y));
    }
  } else {
    rc_.y = std::pow(rc_.log_x, 8.0);
    if (rc_.y >= rc_.x) {
      rc_.notes.push_back("log^8 x = " + fmt(rc_.y) + " exceeds x; y falls back to log x");
      rc_.y = rc_.log_x;
      rc_.y_fallback = true;
    }
  }
  if (rc_.y >= rc_.x) {
    throw Error(ErrorKind::EmptyRange, "y = " + fmt(rc_.y) + " leaves no primes below x = " +
                                           fmt(rc_.x) + " (need y < x)");
  }
  rc_.loglog_y = std::log(std::log(rc_.y));
  rc_.gap = rc_.loglog_x - rc_.loglog_y;

  const double max_E = std::exp(std::sqrt(rc_.loglog_x));
  rc_.E = cfg.E.value_or(std::sqrt(rc_.loglog_x));
  if (!(rc_.E >= 1.0) || !std::isfinite(rc_.E)) throw Error(ErrorKind::Domain, "E must be >= 1");
  if (rc_.E > max_E) {
    throw Error(ErrorKind::Configuration,
                "E must be <= exp(sqrt(loglog x)) = " + fmt(max_E) + ", got " + fmt(rc_.E));
  }
  if (rc_.E < std::sqrt(rc_.loglog_x)) {
    rc_.in_proof_regime = false;
    rc_.notes.push_back("E below sqrt(loglog x): outside the proof regime");
  }
  rc_.B = cfg.B.value_or(static_cast<std::size_t>(std::floor(rc_.loglog_x * rc_.loglog_x)));

  const auto all = sieve_primes(rc_.x);
  const double expo = -1.0 - 2.0 / rc_.log_x;
  for (std::uint32_t p : all) {
    if (static_cast<double>(p) < rc_.y) {
      small_primes_.push_back(p);
      continue;
    }
    primes_.push_back(p);
    const double lp = std::log(static_cast<double>(p));
    log_p_.push_back(lp);
    weight_.push_back(std::exp(expo * lp));
  }
  if (primes_.empty()) throw Error(ErrorKind::EmptyRange, "no primes in [y, x]");
  resolve_M(cfg);
}

void PrimeProcess::resolve_M(const PrimeProcessConfig& cfg) {
  rc_.M_grid_limit = static_cast<std::size_t>(std::floor(rc_.log_x / rc_.E * (1.0 + 1e-12)));
  if (rc_.M_grid_limit < 1) {
    throw Error(ErrorKind::Configuration, "E > log x leaves no grid points in a block");
  }
  rc_.M_formula = rc_.log_x / (rc_.K * rc_.E * std::log(rc_.y));

  // Grow T_0 point by point while every correlation stays >= 1/loglog x.
  const double floor_r = 1.0 / rc_.loglog_x;
  const double step = rc_.E / rc_.log_x;
  rc_.largest_admissible_M = 1;
  for (std::size_t m = 2; m <= rc_.M_grid_limit; ++m) {
    const double tm = 1.0 + static_cast<double>(m) * step;
    bool ok = true;
    for (std::size_t i = 1; i < m && ok; ++i) {
      ok = exact_correlation(1.0 + static_cast<double>(i) * step, tm) >= floor_r;
    }
    if (!ok) break;
    rc_.largest_admissible_M = m;
  }

  if (cfg.M) {
    if (*cfg.M < 1 || *cfg.M > rc_.M_grid_limit) {
      throw Error(ErrorKind::Configuration,
                  "M must lie in [1, floor(log x/E)] = [1, " + std::to_string(rc_.M_grid_limit) +
                      "], got " + std::to_string(*cfg.M));
    }
    rc_.M = *cfg.M;
  } else {
    auto m = static_cast<std::size_t>(std::max(0.0, std::floor(rc_.M_formula)));
    if (m > rc_.M_grid_limit) {
      rc_.notes.push_back("M formula exceeds floor(log x/E); clipped");
      m = rc_.M_grid_limit;
    }
    if (m < 2) {
      rc_.notes.push_back("M formula gives " + fmt(rc_.M_formula) +
                          "; using the largest admissible M = " +
                          std::to_string(rc_.largest_admissible_M));
      rc_.M_raised = rc_.largest_admissible_M > m;
      m = std::max(m, rc_.largest_admissible_M);
    }
    rc_.M = std::max<std::size_t>(m, 1);
  }
  rc_.K_check_passed = rc_.M <= rc_.largest_admissible_M;
  if (!rc_.K_check_passed) {
    rc_.notes.push_back("min correlation in T_0 falls below 1/loglog x; largest admissible M = " +
                        std::to_string(rc_.largest_admissible_M));
  }
}

double PrimeProcess::cosine_sum(double a, SumOrder order) const {
  CompensatedSum acc;
  const std::size_t n = primes_.size();
  if (order == SumOrder::Ascending) {
    for (std::size_t i = 0; i < n; ++i) acc += std::cos(a * log_p_[i]) * weight_[i];
  } else {
    for (std::size_t i = n; i-- > 0;) acc += std::cos(a * log_p_[i]) * weight_[i];
  }
  return acc.value();
}

double PrimeProcess::exact_covariance(double t, double s, SumOrder order) const {
  if (!(t >= 1.0 && s >= 1.0) || !std::isfinite(t) || !std::isfinite(s)) {
    throw Error(ErrorKind::Domain, "exact_covariance needs t, s >= 1");
  }
  CompensatedSum acc;
  const std::size_t n = primes_.size();
  auto term = [&](std::size_t i) {
    return 0.5 * (std::cos((t + s) * log_p_[i]) + std::cos((t - s) * log_p_[i])) * weight_[i];
  };
  if (order == SumOrder::Ascending) {
    for (std::size_t i = 0; i < n; ++i) acc += term(i);
  } else {
    for (std::size_t i = n; i-- > 0;) acc += term(i);
  }
  return acc.value();
}

double PrimeProcess::exact_correlation(double t, double s) const {
  if (t == s) return 1.0;
  const double r = exact_covariance(t, s) / std::sqrt(exact_covariance(t, t) * exact_covariance(s, s));
  return std::clamp(r, -1.0, 1.0);
}

double PrimeProcess::approx_correlation(double t, double s) const {
  if (t == s) return 1.0;
  const double v = std::log(1.0 / (std::abs(t - s) * std::log(rc_.y))) / rc_.gap;
  return std::clamp(v, -1.0, 1.0);
}

std::vector<double> PrimeProcess::grid(std::size_t n) const {
  std::vector<double> ts(rc_.M);
  const double base = 2.0 * static_cast<double>(n) + 1.0;
  for (std::size_t i = 0; i < rc_.M; ++i) {
    ts[i] = base + static_cast<double>(i + 1) * rc_.E / rc_.log_x;
  }
  return ts;
}

std::vector<double> PrimeProcess::all_grids() const {
  const std::size_t dim = (rc_.B + 1) * rc_.M;
  if (dim > matrix_dimension_cap()) {
    throw Error(ErrorKind::ResourceLimit, "(B+1) M = " + std::to_string(dim) +
                                              " exceeds the matrix dimension cap " +
                                              std::to_string(matrix_dimension_cap()));
  }
  std::vector<double> ts;
  ts.reserve(dim);
  for (std::size_t n = 0; n <= rc_.B; ++n) {
    const auto g = grid(n);
    ts.insert(ts.end(), g.begin(), g.end());
  }
  return ts;
}

CorrelationMatrix PrimeProcess::exact_matrix(std::span<const double> ts) const {
  const std::size_t n = ts.size();
  Matrix cov(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      cov(i, j) = cov(j, i) = exact_covariance(ts[i], ts[j]);
    }
  }
  return CorrelationMatrix::from_covariance(cov);
}

double PrimeProcess::small_prime_variance() const {
  CompensatedSum acc;
  const double expo = -1.0 - 2.0 / rc_.log_x;
  for (std::uint32_t p : small_primes_) acc += 0.5 * std::pow(static_cast<double>(p), expo);
  return acc.value();
}

std::vector<double> PrimeProcess::normalized_coefficients(std::span<const double> ts) const {
  const std::size_t T = ts.size();
  std::vector<double> sd(T);
  for (std::size_t k = 0; k < T; ++k) sd[k] = std::sqrt(exact_covariance(ts[k], ts[k]));
  std::vector<double> alpha(primes_.size() * T);
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    const double amp = std::sqrt(weight_[i]);
    for (std::size_t k = 0; k < T; ++k) {
      alpha[i * T + k] = std::cos(ts[k] * log_p_[i]) * amp / sd[k];
    }
  }
  return alpha;
}

std::vector<double> PrimeProcess::rademacher_sample(std::span<const double> ts, std::uint64_t seed,
                                                    std::uint64_t sample,
                                                    std::optional<int> forced_sign) const {
  if (forced_sign && *forced_sign != 1 && *forced_sign != -1) {
    throw Error(ErrorKind::Domain, "forced sign must be +1 or -1");
  }
  const std::size_t T = ts.size();
  std::vector<CompensatedSum> acc(T);
  SampleStream stream(seed, sample, StreamTag::Rademacher);
  std::uint32_t bits = 0;
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    if (i % 32 == 0) bits = stream.next_bits();
    const double f = forced_sign ? *forced_sign : ((bits >> (i % 32)) & 1u ? 1.0 : -1.0);
    const double amp = f * std::sqrt(weight_[i]);
    for (std::size_t k = 0; k < T; ++k) acc[k] += std::cos(ts[k] * log_p_[i]) * amp;
  }
  std::vector<double> out(T);
  for (std::size_t k = 0; k < T; ++k) {
    out[k] = acc[k].value() / std::sqrt(exact_covariance(ts[k], ts[k]));
  }
  return out;
}

ProcessCovarianceReport build_block_matrix(const PrimeProcess& proc) {
  const auto& rc = proc.config();
  ProcessCovarianceReport rep;
  rep.grid = proc.grid(rc.block_n);
  rep.loglog_x_minus_loglog_y = rc.gap;
  const std::size_t n = rep.grid.size();
  rep.exact = proc.exact_matrix(rep.grid);
  Matrix approx(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      approx(i, j) = proc.approx_correlation(rep.grid[i], rep.grid[j]);
      rep.max_residual = std::max(rep.max_residual, std::abs(rep.exact(i, j) - approx(i, j)));
    }
  }
  rep.approx = CorrelationMatrix(std::move(approx));
  return rep;
}

namespace {

struct PivotChoice {
  BoundConfig cfg;
  HalaszPivotRule rule;
  bool usable = false;
};

PivotChoice choose_cd(const CorrelationMatrix& m, std::size_t pivot, const BoundConfig& base,
                      const ResolvedPrimeConfig& rc) {
  PivotChoice out;
  out.rule.m = pivot;
  out.cfg = base;
  if (pivot == 1) {
    out.rule.rule = "explicit";
    out.usable = true;
    return out;
  }
  const std::size_t k = pivot - 1;
  std::vector<double> c(k), d(k);
  for (std::size_t j = 1; j <= k; ++j) {
    const double lag = static_cast<double>(pivot - j);
    c[j - 1] = std::max(0.0, 1.0 - std::log(lag * rc.E) / rc.gap);
    d[j - 1] = 1.0 - c[j - 1];
  }
  const auto v = validate_cd(m, pivot, c, d);
  if (v.passed_up_to_boundary()) {
    out.cfg.cd_rule = CdRule::Explicit;
    out.cfg.c = std::move(c);
    out.cfg.d = std::move(d);
    out.rule.rule = "explicit";
    out.usable = true;
    return out;
  }
  out.rule.explicit_failure = v.summary();

  BoundConfig sc = base;
  sc.cd_rule = CdRule::StationaryComplement;
  const auto scd = cd_for_pivot(m, pivot, sc);
  if (validate_cd(m, pivot, scd.c, scd.d).passed_up_to_boundary()) {
    out.cfg = sc;
    out.rule.rule = "stationary-complement";
    out.usable = true;
    return out;
  }

  std::vector<double> zc(k, 0.0), one(k, 1.0);
  if (validate_cd(m, pivot, zc, one).passed_up_to_boundary()) {
    out.cfg.cd_rule = CdRule::Explicit;
    out.cfg.c = std::move(zc);
    out.cfg.d = std::move(one);
    out.rule.rule = "zero-c";
    out.usable = true;
    return out;
  }
  out.rule.rule = "trivial";
  return out;
}

double halasz_bound_on_block(const PrimeProcess& proc, std::size_t block, HalaszResult* detail) {
  const auto& rc = proc.config();
  const auto m = proc.exact_matrix(proc.grid(block));
  if (m.has_repeated_variables()) {
    throw Error(ErrorKind::RepeatedVariable, "grid points with |r| = 1 in the exact matrix");
  }
  BoundConfig base;
  base.u = std::sqrt(2.0 * rc.gap);
  base.H = 1.0 / base.u;
  base.delta = 1.0 / rc.loglog_x;
  base.cd_rule = CdRule::Explicit;

  TailBoundResult res;
  res.params_echo = base;
  res.prefactor = base.H * std::exp(-0.5 * (base.u + base.H) * (base.u + base.H)) * kInvSqrt2Pi;
  double sum = 0.0;
  for (std::size_t p = 1; p <= m.size(); ++p) {
    auto choice = choose_cd(m, p, base, rc);
    PivotTerm term;
    if (choice.usable) {
      term = pivot_infimum(m, p, choice.cfg, base.H);
    } else {
      term.m = p;
      term.method = "trivial";
      term.log_inf_h_value = -std::numeric_limits<double>::infinity();
      term.h_at_inf = std::numeric_limits<double>::quiet_NaN();
      term.B_delta = std::numeric_limits<double>::quiet_NaN();
    }
    if (choice.rule.rule != "explicit") {
      res.diagnostics.push_back("pivot " + std::to_string(p) + ": explicit (c, d) failed (" +
                                choice.rule.explicit_failure + "); used " + choice.rule.rule);
    }
    if (term.method == "h-too-large") {
      res.diagnostics.push_back("pivot " + std::to_string(p) +
                                ": some cap u - r_jm(u+h) < 0 on [0, H]; term set to 0");
    }
    sum += term.inf_h_value;
    res.per_m.push_back(std::move(term));
    if (detail) detail->rules.push_back(choice.rule);
  }
  res.bound = std::clamp(res.prefactor * sum, 0.0, 1.0);
  const double b = res.bound;
  if (detail) detail->result = std::move(res);
  return b;
}

}  // namespace

HalaszResult halasz_bound_instance(const PrimeProcess& proc) {
  HalaszResult out;
  halasz_bound_on_block(proc, proc.config().block_n, &out);
  const auto& rc = proc.config();
  const double lll = std::log(rc.loglog_x);
  out.shape_scalar = lll > 0.0 ? out.result.bound * rc.loglog_x * rc.loglog_x / std::sqrt(lll)
                               : std::numeric_limits<double>::quiet_NaN();
  return out;
}

DecouplingReport block_decoupling_error(const PrimeProcess& proc) {
  const auto& rc = proc.config();
  DecouplingReport rep;
  rep.u = std::sqrt(2.0 * rc.gap);
  const double Bd = static_cast<double>(rc.B);
  const double ly = std::log(rc.y);
  rep.asymptotic_shape = (Bd * (rc.B > 1 ? std::log(Bd) : 0.0) / ly + Bd * Bd * Bd * std::exp(-std::sqrt(ly))) /
                    (rc.loglog_x * rc.loglog_x);
  const auto ts = proc.all_grids();
  rep.dimension = ts.size();
  if (rc.B == 0) return rep;

  const auto full = proc.exact_matrix(ts);
  Matrix bd = full.matrix();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < ts.size(); ++j) {
      if (i / rc.M != j / rc.M) bd(i, j) = 0.0;
    }
  }
  const CorrelationMatrix diag(std::move(bd));
  const std::vector<double> th(ts.size(), rep.u);
  // One-sided comparison sums in each direction; |difference| <= the larger.
  rep.value = std::max(comparison_bound(full, diag, th, 2), comparison_bound(diag, full, th, 2));
  rep.variant1 = std::max(comparison_bound(full, diag, th, 1), comparison_bound(diag, full, th, 1));
  return rep;
}

Corollary2Report corollary2_experiment(const PrimeProcess& proc, std::uint64_t n_samples,
                                       std::uint64_t seed, unsigned workers) {
  const auto& rc = proc.config();
  Corollary2Report rep;
  rep.u = std::sqrt(2.0 * rc.gap);
  const auto ts = proc.all_grids();
  rep.dimension = ts.size();
  const auto full = proc.exact_matrix(ts);
  rep.mc_all_below = mc_sup_tail(full, rep.u, n_samples, seed, workers).complement();

  rep.product_of_complements = 1.0;
  for (std::size_t n = 0; n <= rc.B; ++n) {
    rep.block_bounds.push_back(halasz_bound_on_block(proc, n, nullptr));
    rep.product_of_complements *= 1.0 - rep.block_bounds.back();
  }
  rep.decoupling = block_decoupling_error(proc).value;
  rep.analytic_upper = std::min(1.0, rep.product_of_complements + rep.decoupling);
  rep.small_prime_variance = proc.small_prime_variance();
  const double lll = std::log(rc.loglog_x);
  rep.chebyshev_threshold = lll > 0.0 ? std::pow(lll, 0.75) : 0.0;
  rep.sound = rep.mc_all_below.p_hat <= rep.analytic_upper + 4.0 * rep.mc_all_below.std_err;
  return rep;
}

}  // namespace gptb
