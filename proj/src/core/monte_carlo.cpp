#include "gptb/core/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>
#include <vector>

#include "gptb/core/philox.hpp"
#include "gptb/error.hpp"

namespace gptb {

MCEstimate MCEstimate::from_counts(std::uint64_t hits, std::uint64_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw Error(ErrorKind::Configuration, "Monte-Carlo needs n_samples >= 1");
  MCEstimate e;
  e.n_samples = n_samples;
  e.seed = seed;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n_samples);
  e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n_samples));
  e.ci_low = std::max(0.0, e.p_hat - 3.0 * e.std_err);
  e.ci_high = std::min(1.0, e.p_hat + 3.0 * e.std_err);
  return e;
}

MCEstimate MCEstimate::complement() const {
  MCEstimate e = *this;
  e.p_hat = 1.0 - p_hat;
  e.ci_low = std::max(0.0, e.p_hat - 3.0 * e.std_err);
  e.ci_high = std::min(1.0, e.p_hat + 3.0 * e.std_err);
  return e;
}

unsigned default_worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

std::uint64_t parallel_count(std::uint64_t n, unsigned workers,
                             const std::function<bool(std::uint64_t)>& hit) {
  if (workers == 0) workers = default_worker_count();
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(n, 1)));
  auto count_range = [&hit](std::uint64_t begin, std::uint64_t end) {
    std::uint64_t c = 0;
    for (std::uint64_t s = begin; s < end; ++s) c += hit(s) ? 1u : 0u;
    return c;
  };
  if (workers <= 1) return count_range(0, n);

  std::vector<std::uint64_t> partial(workers, 0);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t begin = std::min<std::uint64_t>(n, w * chunk);
      const std::uint64_t end = std::min<std::uint64_t>(n, begin + chunk);
      pool.emplace_back([&, w, begin, end] { partial[w] = count_range(begin, end); });
    }
  }
  std::uint64_t total = 0;
  for (auto c : partial) total += c;
  return total;
}

namespace {

// Row i of the lower factor against g[0..i], four accumulators in a fixed
// order so every sample is evaluated identically on every worker.
inline double lower_row_dot(const double* row, const double* g, std::size_t len) {
  double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
  std::size_t k = 0;
  for (; k + 4 <= len; k += 4) {
    a0 += row[k] * g[k];
    a1 += row[k + 1] * g[k + 1];
    a2 += row[k + 2] * g[k + 2];
    a3 += row[k + 3] * g[k + 3];
  }
  for (; k < len; ++k) a0 += row[k] * g[k];
  return (a0 + a1) + (a2 + a3);
}

}  // namespace

MCEstimate mc_exceedance(const CholeskyFactor& factor, std::span<const double> thresholds,
                         std::uint64_t n_samples, std::uint64_t seed, unsigned workers) {
  const std::size_t n = factor.size();
  if (thresholds.size() != n) {
    std::ostringstream os;
    os << "threshold vector has " << thresholds.size() << " entries, matrix has " << n;
    throw Error(ErrorKind::Configuration, os.str());
  }
  if (n_samples == 0) throw Error(ErrorKind::Configuration, "Monte-Carlo needs n_samples >= 1");
  const double* lower = factor.lower().data().data();

  auto hit = [&](std::uint64_t sample) {
    thread_local std::vector<double> g;
    g.resize(n);
    SampleStream stream(seed, sample, StreamTag::Gaussian);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = stream.next_normal();
      if (lower_row_dot(lower + i * n, g.data(), i + 1) > thresholds[i]) return true;
    }
    return false;
  };
  return MCEstimate::from_counts(parallel_count(n_samples, workers, hit), n_samples, seed);
}

MCEstimate mc_sup_tail(const CorrelationMatrix& m, double u, std::uint64_t n_samples,
                       std::uint64_t seed, unsigned workers) {
  const CholeskyFactor factor = cholesky(m);
  const std::vector<double> thresholds(m.size(), u);
  return mc_exceedance(factor, thresholds, n_samples, seed, workers);
}

}  // namespace gptb
