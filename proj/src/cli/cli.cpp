#include "gptb/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "gptb/clt_transfer.hpp"
#include "gptb/core/monte_carlo.hpp"
#include "gptb/core/orthant.hpp"
#include "gptb/error.hpp"
#include "gptb/instances.hpp"
#include "gptb/pickands.hpp"
#include "gptb/prime_process.hpp"
#include "gptb/tail_bounds.hpp"

#ifndef GPTB_VERSION
#define GPTB_VERSION "0.0.0"
#endif

namespace gptb::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Config files that do not parse or do not match the expected shape.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string out;
  std::string format;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> footer;  // emitted as '#' comment lines
};

struct Outcome {
  json config_echo = json::object();
  json result = json::object();
  Table table;
  std::string default_format = "json";
  int exit_code = kExitOk;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing required key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("key '") + key + "': " + e.what());
  }
}

template <class T>
T field_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? field<T>(j, key) : fallback;
}

CorrelationMatrix matrix_from_json(const json& rows) {
  if (!rows.is_array()) throw ConfigError("matrix must be an array of rows");
  std::vector<std::vector<double>> r;
  try {
    r = rows.get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("matrix: ") + e.what());
  }
  for (const auto& row : r) {
    if (row.size() != r.size()) throw ConfigError("matrix must be square");
  }
  return CorrelationMatrix(Matrix::from_rows(r));
}

CorrelationMatrix load_matrix(const fs::path& path) {
  const json j = read_json_file(path);
  return matrix_from_json(j.is_object() ? j.value("matrix", json()) : j);
}

json matrix_json(const CorrelationMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto r = m.matrix().row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return rows;
}

json mc_json(const MCEstimate& e) {
  return {{"p_hat", e.p_hat}, {"std_err", e.std_err}, {"n_samples", e.n_samples},
          {"seed", e.seed},   {"ci_low", e.ci_low},   {"ci_high", e.ci_high}};
}

json validation_json(const CdValidation& v) {
  json pairs = json::array();
  for (const auto& p : v.pair_violations) {
    pairs.push_back({{"j", p.j}, {"k", p.k}, {"margin", p.margin}, {"boundary", p.boundary}});
  }
  return {{"pivot", v.pivot},
          {"passed", v.passed()},
          {"entries_ok", v.entries_ok},
          {"ratio_monotone", v.ratio_monotone},
          {"pairs_ok", v.pairs_ok},
          {"denominators_ok", v.denominators_ok},
          {"bad_entries", v.bad_entries},
          {"ratio_violations", v.ratio_violations},
          {"pair_violations", pairs},
          {"denominator_violations", v.denominator_violations},
          {"summary", v.summary()}};
}

json bound_json(const TailBoundResult& r) {
  json per_m = json::array();
  for (const auto& t : r.per_m) {
    per_m.push_back({{"m", t.m},
                     {"inf_h_value", t.inf_h_value},
                     {"log_inf_h_value", t.log_inf_h_value},
                     {"h_at_inf", t.h_at_inf},
                     {"B_delta", t.B_delta},
                     {"method", t.method},
                     {"cd_boundary", t.cd_boundary}});
  }
  const auto& p = r.params_echo;
  return {{"bound", r.bound},
          {"prefactor", r.prefactor},
          {"per_m", per_m},
          {"params", {{"u", p.u},
                      {"H", p.H},
                      {"delta", p.delta},
                      {"c", p.c},
                      {"d", p.d},
                      {"h_grid_points", p.h_grid_points},
                      {"cd_rule", std::string(to_string(p.cd_rule))}}},
          {"diagnostics", r.diagnostics}};
}

json resolved_json(const ResolvedPrimeConfig& c) {
  return {{"x", c.x},
          {"y", c.y},
          {"E", c.E},
          {"K", c.K},
          {"M", c.M},
          {"block_n", c.block_n},
          {"B", c.B},
          {"log_x", c.log_x},
          {"loglog_x", c.loglog_x},
          {"loglog_y", c.loglog_y},
          {"gap", c.gap},
          {"M_formula", c.M_formula},
          {"M_grid_limit", c.M_grid_limit},
          {"largest_admissible_M", c.largest_admissible_M},
          {"K_check_passed", c.K_check_passed},
          {"y_fallback", c.y_fallback},
          {"M_raised", c.M_raised},
          {"in_proof_regime", c.in_proof_regime},
          {"notes", c.notes}};
}

json clt_error_json(const CLTErrorReport& e) {
  return {{"mode", std::string(to_string(e.mode))},
          {"cube_sum", e.cube_sum},
          {"full_triple_sum", e.full_triple_sum},
          {"third_deriv_cap", e.third_deriv_cap},
          {"total_error", e.total_error}};
}

// ---- bound -----------------------------------------------------------------

Outcome cmd_bound(const std::string& config_path) {
  const fs::path path(config_path);
  const json cfg = read_json_file(path);
  if (!cfg.is_object()) throw ConfigError("bound config must be a JSON object");

  std::optional<CorrelationMatrix> m;
  if (cfg.contains("matrix")) {
    m = matrix_from_json(cfg.at("matrix"));
  } else if (cfg.contains("matrix_file")) {
    fs::path mp = field<std::string>(cfg, "matrix_file");
    if (mp.is_relative()) mp = path.parent_path() / mp;
    m = load_matrix(mp);
  } else {
    throw ConfigError("bound config needs 'matrix' or 'matrix_file'");
  }

  BoundConfig bc;
  bc.u = field<double>(cfg, "u");
  bc.H = field<double>(cfg, "H");
  bc.delta = field<double>(cfg, "delta");
  bc.c = field_or<std::vector<double>>(cfg, "c", {});
  bc.d = field_or<std::vector<double>>(cfg, "d", {});
  bc.h_grid_points = field_or<unsigned>(cfg, "h_grid_points", bc.h_grid_points);
  bc.cd_rule = cd_rule_from_string(field_or<std::string>(cfg, "cd_rule", "explicit"));

  Outcome o;
  o.config_echo = {{"config", path.string()},
                   {"matrix", matrix_json(*m)},
                   {"u", bc.u},
                   {"H", bc.H},
                   {"delta", bc.delta},
                   {"c", bc.c},
                   {"d", bc.d},
                   {"h_grid_points", bc.h_grid_points},
                   {"cd_rule", std::string(to_string(bc.cd_rule))}};

  json validation = json::array();
  bool valid = true;
  for (std::size_t p = 2; p <= m->size(); ++p) {
    const auto cd = cd_for_pivot(*m, p, bc);
    const auto v = validate_cd(*m, p, cd.c, cd.d);
    validation.push_back(validation_json(v));
    valid = valid && (v.passed() || v.passed_up_to_boundary());
  }
  o.result["validation"] = validation;
  o.table.header = {"m", "inf_h_value", "h_at_inf", "B_delta", "method", "bound"};
  if (!valid) {
    o.result["error"] = "validate_cd failed";
    o.exit_code = kExitValidation;
    return o;
  }
  const auto r = prop1_bound(*m, bc);
  o.result["tail_bound"] = bound_json(r);
  for (const auto& t : r.per_m) {
    o.table.rows.push_back({std::to_string(t.m), num(t.inf_h_value), num(t.h_at_inf), num(t.B_delta),
                            t.method, num(r.bound)});
  }
  return o;
}

// ---- sweep -----------------------------------------------------------------

struct SweepRow {
  std::string family;
  std::size_t index = 0;
  std::size_t n = 0;
  double u = 0.0;
  double bound = 0.0;
  double reference = 0.0;
  double std_err = 0.0;
  double tolerance = 0.0;
  std::string reference_kind;
  std::string status;  // pass | fail | skip
  std::string detail;
};

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::mt19937_64 instance_rng(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

std::uint64_t instance_mc_seed(std::uint64_t seed, std::size_t index) {
  return mix64(mix64(seed) ^ (index + 1));
}

struct SweepContext {
  unsigned threads = 0;
  double bound_offset = 0.0;
};

SweepRow make_row(std::string family, std::size_t index, std::size_t n, double u) {
  SweepRow r;
  r.family = std::move(family);
  r.index = index;
  r.n = n;
  r.u = u;
  return r;
}

void finish_row(SweepRow& row, const SweepContext& ctx) {
  row.bound += ctx.bound_offset;
  row.status = row.bound <= row.reference + row.tolerance ? "pass" : "fail";
}

// Reference for P(max Z > u): the quadrature oracle for n <= 3, Monte Carlo above.
void set_reference(SweepRow& row, const CorrelationMatrix& m, double u, std::uint64_t samples,
                   std::uint64_t mc_seed, const SweepContext& ctx) {
  if (m.size() <= 3) {
    const std::vector<double> th(m.size(), u);
    row.reference = 1.0 - orthant_prob_oracle(m, th);
    row.tolerance = 1e-8;
    row.reference_kind = "oracle";
  } else {
    const auto mc = mc_sup_tail(m, u, samples, mc_seed, ctx.threads);
    row.reference = mc.p_hat;
    row.std_err = mc.std_err;
    row.tolerance = 4.0 * mc.std_err;
    row.reference_kind = "mc";
  }
}

template <class Fn>
void guarded(SweepRow& row, const SweepContext& ctx, Fn&& fn) {
  try {
    fn();
    finish_row(row, ctx);
  } catch (const Error& e) {
    row.status = "skip";
    row.detail = std::string(to_string(e.kind())) + ": " + e.what();
  }
}

void family_random_psd(const json& fam, std::uint64_t seed, std::size_t count,
                       const SweepContext& ctx, std::vector<SweepRow>& rows) {
  const std::size_t fixed_n = field_or<std::size_t>(fam, "n", 0);
  const std::optional<std::vector<double>> us =
      fam.contains("u") ? std::optional(field<std::vector<double>>(fam, "u")) : std::nullopt;
  const double delta = field_or<double>(fam, "delta", 0.25);
  const std::uint64_t samples = field_or<std::uint64_t>(fam, "samples", 1'000'000);
  if (fam.contains("n") && fixed_n < 2) throw ConfigError("random_psd: n must be >= 2");
  static constexpr double kDefaultU[] = {0.5, 1.0, 2.0, 3.0};
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = instance_rng(seed, i);
    const std::size_t n = fixed_n != 0 ? fixed_n : 2 + i % 2;
    // redraw until the matrix admits a valid explicit (c, d)
    CorrelationMatrix m = random_correlation(rng, n);
    std::optional<CdSequences> cd = random_valid_cd(rng, m);
    for (int attempt = 0; !cd && attempt < 50; ++attempt) {
      m = random_correlation(rng, n);
      cd = random_valid_cd(rng, m);
    }
    std::vector<double> u_list;
    if (us) {
      u_list = *us;
    } else {
      u_list = {kDefaultU[std::uniform_int_distribution<int>(0, 3)(rng)]};
    }
    for (double u : u_list) {
      SweepRow row = make_row("random_psd", i, n, u);
      if (!cd) {
        row.status = "skip";
        row.detail = "no valid (c, d) found";
        rows.push_back(row);
        continue;
      }
      guarded(row, ctx, [&] {
        BoundConfig bc;
        bc.u = u;
        bc.H = 1.0 / u;
        bc.delta = delta;
        bc.c = cd->c;
        bc.d = cd->d;
        row.bound = prop1_bound(m, bc).bound;
        set_reference(row, m, u, samples, instance_mc_seed(seed, i), ctx);
      });
      rows.push_back(row);
    }
  }
}

void family_random_stationary(const json& fam, std::uint64_t seed, std::size_t count,
                              const SweepContext& ctx, std::vector<SweepRow>& rows) {
  const auto min_n = field_or<std::size_t>(fam, "min_n", 2);
  const auto max_n = field_or<std::size_t>(fam, "max_n", 256);
  const std::uint64_t samples = field_or<std::uint64_t>(fam, "samples", 1'000'000);
  const double u_lo = field_or<double>(fam, "u_min", 1.0);
  const double u_hi = field_or<double>(fam, "u_max", 3.0);
  if (min_n < 2 || max_n < min_n) throw ConfigError("random_stationary: need 2 <= min_n <= max_n");
  if (!(u_lo >= 1.0 && u_hi >= u_lo)) throw ConfigError("random_stationary: need 1 <= u_min <= u_max");
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = instance_rng(seed, i);
    const std::size_t n = std::uniform_int_distribution<std::size_t>(min_n, max_n)(rng);
    const auto lags = random_stationary_lags(rng, n);
    double u = std::uniform_real_distribution<double>(u_lo, u_hi)(rng);
    // the stationary theorem needs r(1)(1 + 2/u^2) <= 1
    const double r1 = lags[1];
    if (r1 > 0.0) u = std::max(u, std::sqrt(2.0 * r1 / (1.0 - r1)) * (1.0 + 1e-12));
    SweepRow row = make_row("random_stationary", i, n, u);
    guarded(row, ctx, [&] {
      row.bound = theorem1_bound(lags, n, u).bound;
      const auto m = CorrelationMatrix::stationary(lags, n);
      set_reference(row, m, u, samples, instance_mc_seed(seed, i), ctx);
    });
    rows.push_back(row);
  }
}

void family_shao_grid(const json& fam, std::uint64_t seed, std::size_t count,
                      const SweepContext& ctx, std::vector<SweepRow>& rows) {
  const double a_lo = field_or<double>(fam, "alpha_min", 0.2);
  const double a_hi = field_or<double>(fam, "alpha_max", 0.95);
  const double u_lo = field_or<double>(fam, "u_min", 3.0);
  const double u_hi = field_or<double>(fam, "u_max", 4.0);
  const auto max_M = field_or<std::size_t>(fam, "max_M", 256);
  const std::uint64_t samples = field_or<std::uint64_t>(fam, "samples", 1'000'000);
  if (!(a_lo > 0.0 && a_hi >= a_lo && a_hi <= 2.0)) throw ConfigError("shao_grid: need 0 < alpha_min <= alpha_max <= 2");
  if (!(u_lo > 0.0 && u_hi >= u_lo)) throw ConfigError("shao_grid: need 0 < u_min <= u_max");
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = instance_rng(seed, i);
    std::uniform_real_distribution<double> ua(a_lo, a_hi), uu(u_lo, u_hi);
    double alpha = 0.0, u = 0.0;
    std::size_t M = 0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      alpha = ua(rng);
      u = uu(rng);
      M = pickands_grid_size(alpha, u, PickandsOptions{}.b);
      if (M >= 2 && M <= max_M) break;
    }
    SweepRow row = make_row("shao_grid", i, M, u);
    row.detail = "alpha=" + num(alpha);
    guarded(row, ctx, [&] {
      PickandsOptions opts;
      opts.max_M = max_M;
      const auto ev = pickands_lower_surrogate(alpha, u, opts);
      row.bound = ev.stationary_bound;
      const auto m = pickands_grid_matrix(alpha, ev.M);
      row.n = m.size();
      set_reference(row, m, u, samples, instance_mc_seed(seed, i), ctx);
    });
    rows.push_back(row);
  }
}

void family_prime_process(const json& fam, std::uint64_t seed, std::size_t count,
                          const SweepContext& ctx, std::vector<SweepRow>& rows) {
  const auto xs = field_or<std::vector<double>>(fam, "x", {1e4});
  const std::uint64_t samples = field_or<std::uint64_t>(fam, "samples", 1'000'000);
  if (xs.empty()) throw ConfigError("prime_process: 'x' must not be empty");
  for (std::size_t i = 0; i < count; ++i) {
    PrimeProcessConfig pc;
    pc.x = xs[i % xs.size()];
    if (fam.contains("y")) pc.y = field<double>(fam, "y");
    if (fam.contains("E")) pc.E = field<double>(fam, "E");
    if (fam.contains("M")) pc.M = field<std::size_t>(fam, "M");
    if (fam.contains("B")) pc.B = field<std::size_t>(fam, "B");
    SweepRow row = make_row("prime_process", i, 0, 0.0);
    row.detail = "x=" + num(pc.x);
    guarded(row, ctx, [&] {
      {
        const PrimeProcess probe(pc);
        pc.block_n = (i / xs.size()) % (probe.config().B + 1);
      }
      const PrimeProcess proc(pc);
      const auto h = halasz_bound_instance(proc);
      const auto block = build_block_matrix(proc);
      row.u = h.result.params_echo.u;
      row.n = block.exact.size();
      row.bound = h.result.bound;
      row.detail += " block=" + std::to_string(pc.block_n);
      set_reference(row, block.exact, row.u, samples, instance_mc_seed(seed, i), ctx);
    });
    rows.push_back(row);
  }
}

Outcome cmd_sweep(const std::string& suite_path, const Globals& g, double bound_offset,
                  std::ostream& err) {
  const json suite = read_json_file(suite_path);
  const json families = suite.is_array() ? suite : suite.value("families", json::array());
  if (!families.is_array()) throw ConfigError("suite 'families' must be an array");

  Outcome o;
  o.default_format = "csv";
  o.config_echo = {{"suite", suite_path}, {"families", families}, {"bound_offset", bound_offset}};
  const SweepContext ctx{g.threads, bound_offset};

  std::vector<SweepRow> rows;
  for (const auto& fam : families) {
    if (!fam.is_object()) throw ConfigError("each suite family must be an object");
    const auto name = field<std::string>(fam, "family");
    const auto count = field<std::size_t>(fam, "count");
    if (!fam.contains("seed")) throw ConfigError("family '" + name + "' has no seed; seeds are mandatory");
    const auto seed = field<std::uint64_t>(fam, "seed");
    if (name == "random_psd") {
      family_random_psd(fam, seed, count, ctx, rows);
    } else if (name == "random_stationary") {
      family_random_stationary(fam, seed, count, ctx, rows);
    } else if (name == "shao_grid") {
      family_shao_grid(fam, seed, count, ctx, rows);
    } else if (name == "prime_process") {
      family_prime_process(fam, seed, count, ctx, rows);
    } else {
      throw ConfigError("unknown family '" + name + "'");
    }
  }

  std::size_t passed = 0, failed = 0, skipped = 0;
  json jrows = json::array();
  o.table.header = {"family", "index", "n",         "u",              "bound",  "reference",
                    "std_err", "tolerance", "reference_kind", "status", "detail"};
  for (const auto& r : rows) {
    passed += r.status == "pass";
    failed += r.status == "fail";
    skipped += r.status == "skip";
    if (r.status == "fail") {
      err << "soundness violation: " << r.family << " #" << r.index << " bound " << num(r.bound)
          << " > reference " << num(r.reference) << " + " << num(r.tolerance) << "\n";
    }
    o.table.rows.push_back({r.family, std::to_string(r.index), std::to_string(r.n), num(r.u),
                            num(r.bound), num(r.reference), num(r.std_err), num(r.tolerance),
                            r.reference_kind, r.status, r.detail});
    jrows.push_back({{"family", r.family},
                     {"index", r.index},
                     {"n", r.n},
                     {"u", r.u},
                     {"bound", r.bound},
                     {"reference", r.reference},
                     {"std_err", r.std_err},
                     {"tolerance", r.tolerance},
                     {"reference_kind", r.reference_kind},
                     {"status", r.status},
                     {"detail", r.detail}});
  }
  o.result = {{"rows", jrows},
              {"total", rows.size()},
              {"passed", passed},
              {"failed", failed},
              {"skipped", skipped}};
  o.table.footer.push_back("total=" + std::to_string(rows.size()) + " passed=" + std::to_string(passed) +
                           " failed=" + std::to_string(failed) + " skipped=" + std::to_string(skipped));
  if (failed > 0) o.exit_code = kExitSoundness;
  return o;
}

// ---- thin wrappers ---------------------------------------------------------

struct PickandsArgs {
  double alpha = 0.0;
  double u = 0.0;
  PickandsOptions opts;
  std::optional<double> delta;
};

Outcome cmd_pickands(const PickandsArgs& a) {
  PickandsOptions opts = a.opts;
  opts.delta = a.delta;
  const auto ev = pickands_lower_surrogate(a.alpha, a.u, opts);
  Outcome o;
  o.default_format = "csv";
  o.config_echo = {{"alpha", a.alpha}, {"u", a.u},         {"b", opts.b},
                   {"a", opts.a},      {"delta", ev.delta}, {"max_M", opts.max_M},
                   {"max_u", opts.max_u}, {"check_psd", opts.check_psd}};
  const auto& ref = ev.references;
  o.result = {{"alpha", ev.alpha},
              {"u", ev.u},
              {"M", ev.M},
              {"b", ev.b},
              {"a", ev.a},
              {"delta", ev.delta},
              {"finite_u_value", ev.finite_u_value},
              {"log_finite_u_value", ev.log_finite_u_value},
              {"stationary_bound", ev.stationary_bound},
              {"inf_h_value", ev.inf_h_value},
              {"B_delta", ev.B_delta},
              {"head_product", ev.head_product},
              {"tail_product", ev.tail_product},
              {"in_proof_regime", ev.in_proof_regime},
              {"covariance", ev.covariance},
              {"references", {{"conjecture", ref.conjecture},
                              {"shao_lower", ref.shao_lower ? json(*ref.shao_lower) : json()},
                              {"shao_upper", ref.shao_upper ? json(*ref.shao_upper) : json()},
                              {"dmr", ref.dmr},
                              {"michna", ref.michna},
                              {"corollary1_shape", ref.corollary1_shape}}}};
  o.table.header = {"alpha", "u", "M", "b", "a", "delta", "finite_u_value", "stationary_bound",
                    "inf_h_value", "B_delta", "in_proof_regime", "covariance", "conjecture", "dmr",
                    "michna"};
  o.table.rows.push_back({num(ev.alpha), num(ev.u), std::to_string(ev.M), num(ev.b), num(ev.a),
                          num(ev.delta), num(ev.finite_u_value), num(ev.stationary_bound),
                          num(ev.inf_h_value), num(ev.B_delta), ev.in_proof_regime ? "true" : "false",
                          ev.covariance, num(ref.conjecture), num(ref.dmr), num(ref.michna)});
  return o;
}

struct PrimeArgs {
  double x = 1e6;
  std::optional<double> y, E;
  double K = 2.0;
  std::optional<std::size_t> M, B;
  std::size_t block = 0;
  std::uint64_t samples = 200'000;
};

PrimeProcessConfig prime_config(const PrimeArgs& a) {
  PrimeProcessConfig pc;
  pc.x = a.x;
  pc.y = a.y;
  pc.E = a.E;
  pc.K = a.K;
  pc.M = a.M;
  pc.B = a.B;
  pc.block_n = a.block;
  return pc;
}

json optional_json(const auto& v) { return v ? json(*v) : json(); }

Outcome cmd_primeproc(const PrimeArgs& a, const Globals& g) {
  const PrimeProcess proc(prime_config(a));
  const auto& rc = proc.config();
  Outcome o;
  o.config_echo = {{"x", a.x},           {"y", optional_json(a.y)}, {"E", optional_json(a.E)},
                   {"K", a.K},           {"M", optional_json(a.M)}, {"B", optional_json(a.B)},
                   {"block", a.block},   {"samples", a.samples}};

  const auto block = build_block_matrix(proc);
  const auto h = halasz_bound_instance(proc);
  const auto dec = block_decoupling_error(proc);
  json rules = json::array();
  for (const auto& r : h.rules) {
    rules.push_back({{"m", r.m}, {"rule", r.rule}, {"explicit_failure", r.explicit_failure}});
  }
  o.result = {{"resolved", resolved_json(rc)},
              {"prime_count", proc.prime_count()},
              {"small_prime_variance", proc.small_prime_variance()},
              {"block_matrix", {{"grid", block.grid},
                                {"exact", matrix_json(block.exact)},
                                {"approx", matrix_json(block.approx)},
                                {"max_residual", block.max_residual},
                                {"residual_times_loglog_x", block.max_residual * rc.loglog_x}}},
              {"halasz", {{"tail_bound", bound_json(h.result)},
                          {"rules", rules},
                          {"shape_scalar", h.shape_scalar}}},
              {"decoupling", {{"value", dec.value},
                              {"variant1", dec.variant1},
                              {"u", dec.u},
                              {"dimension", dec.dimension},
                              {"asymptotic_shape", dec.asymptotic_shape}}}};
  if (a.samples > 0) {
    const auto c2 = corollary2_experiment(proc, a.samples, g.seed, g.threads);
    o.result["all_blocks"] = {{"u", c2.u},
                              {"dimension", c2.dimension},
                              {"mc_all_below", mc_json(c2.mc_all_below)},
                              {"block_bounds", c2.block_bounds},
                              {"product_of_complements", c2.product_of_complements},
                              {"decoupling", c2.decoupling},
                              {"analytic_upper", c2.analytic_upper},
                              {"chebyshev_threshold", c2.chebyshev_threshold},
                              {"sound", c2.sound}};
  }
  o.table.header = {"x", "y", "E", "M", "B", "max_residual", "halasz_bound", "decoupling"};
  o.table.rows.push_back({num(rc.x), num(rc.y), num(rc.E), std::to_string(rc.M), std::to_string(rc.B),
                          num(block.max_residual), num(h.result.bound), num(dec.value)});
  return o;
}

struct CltArgs {
  std::string coeffs;
  std::optional<double> x;
  std::optional<std::size_t> block;
  double a = 1.0;
  double b = 1.5;
  std::string mode = "exact";
  std::uint64_t samples = 0;
};

Outcome cmd_clt_error(const CltArgs& a, const Globals& g) {
  if (a.coeffs.empty() == !a.x.has_value()) throw ConfigError("clt-error needs exactly one of --coeffs or --x");
  std::optional<CoefficientArray> coeffs;
  json source;
  if (!a.coeffs.empty()) {
    const json j = read_json_file(a.coeffs);
    const json rows = j.is_object() ? j.value("alpha", json()) : j;
    std::vector<std::vector<double>> r;
    try {
      r = rows.get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("coefficients: ") + e.what());
    }
    if (r.empty()) throw ConfigError("coefficient array is empty");
    std::vector<double> flat;
    for (const auto& row : r) {
      if (row.size() != r.front().size()) throw ConfigError("coefficient rows differ in length");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    coeffs.emplace(r.size(), r.front().size(), std::move(flat));
    source = {{"coeffs", a.coeffs}};
  } else {
    PrimeArgs pa;
    pa.x = *a.x;
    const PrimeProcess proc(prime_config(pa));
    const auto ts = a.block ? proc.grid(*a.block) : proc.all_grids();
    coeffs.emplace(prime_process_coefficients(proc, ts));
    source = {{"x", *a.x}, {"block", optional_json(a.block)}, {"ts", ts}};
  }
  const TripleMode mode = triple_mode_from_string(a.mode);
  Outcome o;
  o.config_echo = {{"source", source}, {"n", coeffs->n()}, {"T", coeffs->T()}, {"a", a.a},
                   {"b", a.b},         {"mode", std::string(to_string(mode))}, {"samples", a.samples}};
  const auto err = rr_error_bound(*coeffs, a.a, a.b, mode);
  o.result["error"] = clt_error_json(err);
  o.table.header = {"n", "T", "a", "b", "mode", "cube_sum", "full_triple_sum", "third_deriv_cap",
                    "total_error"};
  o.table.rows.push_back({std::to_string(coeffs->n()), std::to_string(coeffs->T()), num(a.a), num(a.b),
                          std::string(to_string(mode)), num(err.cube_sum), num(err.full_triple_sum),
                          num(err.third_deriv_cap), num(err.total_error)});
  if (a.samples > 0) {
    const auto t = transfer_bound(*coeffs, a.a, a.b, a.samples, g.seed, g.threads);
    o.result["transfer"] = {{"rademacher", mc_json(t.rademacher)},
                            {"gaussian", mc_json(t.gaussian)},
                            {"gaussian_exact", t.gaussian_exact},
                            {"rhs", t.rhs},
                            {"tolerance", t.tolerance},
                            {"holds", t.holds}};
    if (!t.holds) o.exit_code = kExitSoundness;
  }
  return o;
}

struct MatrixArgs {
  std::string matrix;
  std::vector<double> lags;
  std::size_t n = 0;
  double u = 0.0;
  std::vector<double> thresholds;
  std::uint64_t samples = 1'000'000;
};

CorrelationMatrix matrix_arg(const MatrixArgs& a, json& echo) {
  if (a.matrix.empty() == a.lags.empty()) throw ConfigError("give exactly one of --matrix or --lags");
  if (!a.matrix.empty()) {
    echo["matrix"] = a.matrix;
    return load_matrix(a.matrix);
  }
  const std::size_t n = a.n == 0 ? a.lags.size() : a.n;
  echo["lags"] = a.lags;
  echo["n"] = n;
  return CorrelationMatrix::stationary(a.lags, n);
}

std::vector<double> thresholds_arg(const MatrixArgs& a, std::size_t n) {
  if (a.thresholds.empty()) return std::vector<double>(n, a.u);
  if (a.thresholds.size() != n) throw Error(ErrorKind::Configuration, "--thresholds length differs from the matrix size");
  return a.thresholds;
}

Outcome cmd_mc(const MatrixArgs& a, const Globals& g) {
  Outcome o;
  const auto m = matrix_arg(a, o.config_echo);
  const auto th = thresholds_arg(a, m.size());
  o.config_echo["thresholds"] = th;
  o.config_echo["samples"] = a.samples;
  const auto e = mc_exceedance(cholesky(m), th, a.samples, g.seed, g.threads);
  o.result["exceedance"] = mc_json(e);
  o.table.header = {"n", "p_hat", "std_err", "n_samples", "seed"};
  o.table.rows.push_back({std::to_string(m.size()), num(e.p_hat), num(e.std_err),
                          std::to_string(e.n_samples), std::to_string(e.seed)});
  return o;
}

Outcome cmd_oracle(const MatrixArgs& a) {
  Outcome o;
  const auto m = matrix_arg(a, o.config_echo);
  const auto th = thresholds_arg(a, m.size());
  o.config_echo["thresholds"] = th;
  const double p = orthant_prob_oracle(m, th);
  o.result = {{"orthant_probability", p}, {"exceedance", 1.0 - p}};
  o.table.header = {"n", "orthant_probability", "exceedance"};
  o.table.rows.push_back({std::to_string(m.size()), num(p), num(1.0 - p)});
  return o;
}

// ---- emission --------------------------------------------------------------

std::string render(const Outcome& o, const json& manifest, const std::string& format) {
  std::ostringstream os;
  if (format == "json") {
    json doc = {{"manifest", manifest}, {"result", o.result}};
    os << doc.dump(2) << "\n";
    return os.str();
  }
  os << "# manifest " << manifest.dump() << "\n";
  auto line = [&os](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << csv_field(cells[i]);
    os << "\n";
  };
  line(o.table.header);
  for (const auto& r : o.table.rows) line(r);
  for (const auto& f : o.table.footer) os << "# " << f << "\n";
  return os.str();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explicit lower bounds for Gaussian suprema and their soundness checks", "gptb"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", GPTB_VERSION);

  Globals g;
  app.add_option("--seed", g.seed, "Monte-Carlo seed")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)")->capture_default_str();
  app.add_option("--out", g.out, "write the result here instead of stdout");
  app.add_option("--format", g.format, "json or csv (default depends on the command)")
      ->check(CLI::IsMember({"json", "csv"}));

  std::string bound_config;
  auto* bound = app.add_subcommand("bound", "conditioning lower bound from a JSON config");
  bound->add_option("config", bound_config, "config file")->required();

  std::string suite_path;
  double bound_offset = 0.0;
  auto* sweep = app.add_subcommand("sweep", "soundness sweep over a suite of instance families");
  sweep->add_option("suite", suite_path, "suite file (JSON)")->required();
  sweep->add_option("--bound-offset", bound_offset, "test hook: add this to every bound")->group("");

  PickandsArgs pk;
  auto* pickands = app.add_subcommand("pickands", "finite-u Pickands lower surrogate");
  pickands->add_option("--alpha", pk.alpha, "smoothness index in (0, 2]")->required();
  pickands->add_option("--u", pk.u, "level")->required();
  pickands->add_option("--b", pk.opts.b, "grid factor")->capture_default_str();
  pickands->add_option("--a", pk.opts.a, "overshoot scale")->capture_default_str();
  pickands->add_option("--delta", pk.delta, "delta (default alpha)");
  pickands->add_option("--max-M", pk.opts.max_M, "grid size cap")->capture_default_str();
  pickands->add_option("--max-u", pk.opts.max_u, "level cap")->capture_default_str();

  PrimeArgs pr;
  auto* primeproc = app.add_subcommand("primeproc", "prime-indexed process report");
  primeproc->add_option("--x", pr.x, "x >= 100")->capture_default_str();
  primeproc->add_option("--y", pr.y, "small-prime cutoff");
  primeproc->add_option("--E", pr.E, "grid spacing scale");
  primeproc->add_option("--K", pr.K, "grid constant")->capture_default_str();
  primeproc->add_option("--M", pr.M, "points per block");
  primeproc->add_option("--B", pr.B, "last block index");
  primeproc->add_option("--block", pr.block, "block for the single-block quantities")->capture_default_str();
  primeproc->add_option("--samples", pr.samples, "Monte-Carlo samples for the all-blocks check (0 skips)")
      ->capture_default_str();

  CltArgs cl;
  auto* clt = app.add_subcommand("clt-error", "Rademacher-to-Gaussian transfer error");
  clt->add_option("--coeffs", cl.coeffs, "JSON n x T coefficient array");
  clt->add_option("--x", cl.x, "use the prime-process coefficients at this x");
  clt->add_option("--block", cl.block, "restrict --x to one block");
  clt->add_option("--a", cl.a, "lower threshold")->capture_default_str();
  clt->add_option("--b", cl.b, "upper threshold")->capture_default_str();
  clt->add_option("--mode", cl.mode, "exact or max")->capture_default_str();
  clt->add_option("--samples", cl.samples, "Monte-Carlo samples per side (0 skips)")->capture_default_str();

  MatrixArgs mc_args;
  auto* mc = app.add_subcommand("mc", "Monte-Carlo exceedance probability");
  MatrixArgs or_args;
  auto* oracle = app.add_subcommand("oracle", "quadrature orthant probability (n <= 3)");
  for (auto [cmd, ma] : {std::pair{mc, &mc_args}, std::pair{oracle, &or_args}}) {
    cmd->add_option("--matrix", ma->matrix, "JSON correlation matrix");
    cmd->add_option("--lags", ma->lags, "stationary lags r(0),r(1),...")->delimiter(',');
    cmd->add_option("--n", ma->n, "dimension for --lags (default: number of lags)");
    cmd->add_option("--u", ma->u, "common threshold");
    cmd->add_option("--thresholds", ma->thresholds, "per-coordinate thresholds")->delimiter(',');
  }
  mc->add_option("--samples", mc_args.samples, "samples")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << GPTB_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const std::string started = timestamp_now();
  Outcome o;
  std::string command;
  try {
    if (*bound) {
      command = "bound";
      o = cmd_bound(bound_config);
    } else if (*sweep) {
      command = "sweep";
      o = cmd_sweep(suite_path, g, bound_offset, err);
    } else if (*pickands) {
      command = "pickands";
      o = cmd_pickands(pk);
    } else if (*primeproc) {
      command = "primeproc";
      o = cmd_primeproc(pr, g);
    } else if (*clt) {
      command = "clt-error";
      o = cmd_clt_error(cl, g);
    } else if (*mc) {
      command = "mc";
      o = cmd_mc(mc_args, g);
    } else {
      command = "oracle";
      o = cmd_oracle(or_args);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::Io ? kExitUsage : kExitValidation;
  }

  const json manifest = {{"command", command},
                         {"config_echo", o.config_echo},
                         {"seed", g.seed},
                         {"tool_version", GPTB_VERSION},
                         {"started", started},
                         {"finished", timestamp_now()}};
  const std::string text = render(o, manifest, g.format.empty() ? o.default_format : g.format);
  if (g.out.empty()) {
    out << text;
  } else {
    std::ofstream f(g.out, std::ios::binary);
    if (!(f << text)) {
      err << "error: cannot write '" << g.out << "'\n";
      return kExitUsage;
    }
  }
  if (o.exit_code == kExitValidation) err << "error: validation failed; see the embedded report\n";
  return o.exit_code;
}

}  // namespace gptb::cli
