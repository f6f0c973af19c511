#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "gptb/core/matrix.hpp"
#include "gptb/core/monte_carlo.hpp"
#include "gptb/core/orthant.hpp"
#include "gptb/core/philox.hpp"
#include "gptb/core/special.hpp"
#include "gptb/error.hpp"
#include "support/instances.hpp"

using namespace gptb;
using gptb::testing::random_correlation;

namespace {

// Maclaurin series for erf in long double; independent of libm's erfc.
long double erf_series(long double x) {
  long double term = x;
  long double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-30L) break;
  }
  return sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L);
}

}  // namespace

TEST_CASE("std_normal_cdf reference values") {
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(50.0) == 1.0);
  CHECK(std_normal_cdf(-50.0) == 0.0);
  // mpmath, 40 digits (tests/oracles/compute_oracles.py)
  CHECK(std::abs(std_normal_cdf(1.0) - 0.84134474606854294859) <= 1e-14);
  CHECK(std::abs(std_normal_cdf(-1.0) - 0.15865525393145705141) <= 1e-14);
  CHECK(std::abs(std_normal_cdf(2.5) - 0.99379033467422386483) <= 1e-14);
  CHECK(std::abs(std_normal_cdf(-3.0) - 0.0013498980316300945267) <= 1e-14);
  CHECK(std::abs(std_normal_cdf(-8.0) - 6.2209605742717841235e-16) <= 1e-20);
  CHECK(std::abs(std_normal_cdf(0.3) - 0.61791142218895263307) <= 1e-14);
}

TEST_CASE("std_normal_cdf agrees with an erf power series") {
  for (int k = -300; k <= 300; ++k) {
    const double x = k / 100.0;
    const long double expected = 0.5L * (1.0L + erf_series(x / std::sqrt(2.0L)));
    CHECK(std::abs(std_normal_cdf(x) - static_cast<double>(expected)) <= 1e-14);
  }
}

TEST_CASE("std_normal_cdf is monotone and symmetric") {
  double prev = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double x = -45.0 + 90.0 * k / 10000.0;
    const double p = std_normal_cdf(x);
    CHECK(p >= prev);
    CHECK(std::abs(p + std_normal_cdf(-x) - 1.0) <= 1e-14);
    prev = p;
  }
}

TEST_CASE("log_std_normal_cdf in both tails") {
  CHECK(log_std_normal_cdf(0.0) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_std_normal_cdf(-8.0) == doctest::Approx(std::log(6.2209605742717841235e-16)).epsilon(1e-13));
  CHECK(log_std_normal_cdf(10.0) == doctest::Approx(-7.6198530241605260659e-24).epsilon(1e-10));
  CHECK(std::isinf(log_std_normal_cdf(-45.0)));
}

TEST_CASE("bivariate_normal_density") {
  CHECK(bivariate_normal_density(0, 0, 0) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
  CHECK(bivariate_normal_density(0, 0, 0.5) ==
        doctest::Approx(1.0 / (2.0 * kPi * std::sqrt(0.75))).epsilon(1e-15));
  CHECK_THROWS_AS(bivariate_normal_density(0, 0, 1.0), Error);
  CHECK_THROWS_AS(bivariate_normal_density(0, 0, -1.2), Error);

  SUBCASE("integrates to one at r = 0.9 (composite Simpson oracle)") {
    // Rotated coordinates keep the ridge along the grid diagonal resolved.
    const int steps = 1600;
    const double lim = 9.0;
    const double h = 2 * lim / steps;
    double total = 0.0;
    for (int i = 0; i <= steps; ++i) {
      const double wi = (i == 0 || i == steps) ? 1 : (i % 2 ? 4 : 2);
      for (int j = 0; j <= steps; ++j) {
        const double wj = (j == 0 || j == steps) ? 1 : (j % 2 ? 4 : 2);
        total += wi * wj * bivariate_normal_density(-lim + i * h, -lim + j * h, 0.9);
      }
    }
    total *= h * h / 9.0;
    CHECK(std::abs(total - 1.0) <= 1e-6);
    CHECK(bivariate_normal_density(1, 1, 0.9) > 0.0);
  }
}

TEST_CASE("CorrelationMatrix validation") {
  CHECK_THROWS_AS(CorrelationMatrix(Matrix::from_rows({{1, 0.5}, {0.4, 1}})), Error);
  CHECK_THROWS_AS(CorrelationMatrix(Matrix::from_rows({{1, 0.5}, {0.5, 0.9}})), Error);
  CHECK_THROWS_AS(CorrelationMatrix(Matrix::from_rows({{1, 1.0000001}, {1.0000001, 1}})), Error);
  CHECK_THROWS_AS(Matrix::from_rows({{1, 0.5}, {0.5}}), Error);
  const CorrelationMatrix ok(Matrix::from_rows({{1, 0.3 + 1e-13}, {0.3, 1}}));
  CHECK(ok(0, 1) == ok(1, 0));
  CHECK_FALSE(ok.has_repeated_variables());
  CHECK(CorrelationMatrix::equicorrelated(3, 1.0).has_repeated_variables());
}

TEST_CASE("cholesky examples") {
  const auto id = cholesky(CorrelationMatrix::identity(3));
  CHECK(id.lower() == Matrix::identity(3));

  const auto f = cholesky(CorrelationMatrix::equicorrelated(2, 0.6));
  CHECK(f.lower()(0, 0) == doctest::Approx(1.0));
  CHECK(f.lower()(0, 1) == 0.0);
  CHECK(f.lower()(1, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(f.lower()(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

  try {
    (void)cholesky(Matrix::from_rows({{1, 1.0000001}, {1.0000001, 1}}));
    FAIL("expected a not-positive-definite error");
  } catch (const NotPositiveDefiniteError& e) {
    CHECK(e.index() == 1);
    CHECK(e.kind() == ErrorKind::NotPositiveDefinite);
    CHECK(e.pivot() < 0.0);
  }

  // Singular equicorrelated matrix is rejected; jitter rescues it.
  CHECK_THROWS_AS(cholesky(CorrelationMatrix::equicorrelated(3, 1.0)), NotPositiveDefiniteError);
  CHECK_NOTHROW(cholesky(CorrelationMatrix::equicorrelated(3, 1.0), 1e-6));
}

TEST_CASE("cholesky round trip on random PSD matrices") {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = dim(rng);
    const CorrelationMatrix m = random_correlation(rng, n);
    const auto f = cholesky(m);
    REQUIRE(f.max_reconstruction_error(m.matrix()) <= 1e-10);
    for (std::size_t i = 0; i < n; ++i) CHECK(f.lower()(i, i) > 0.0);
  }
}

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("sample streams are keyed on seed and sample index") {
  SampleStream a(7, 11), b(7, 11), c(7, 12), d(8, 11);
  const double x = a.next_normal();
  CHECK(x == b.next_normal());
  CHECK(x != c.next_normal());
  CHECK(x != d.next_normal());

  SampleStream u(1, 0);
  double sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double v = u.next_normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sumsq / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("MCEstimate invariants") {
  const auto e = MCEstimate::from_counts(300, 1000, 5);
  CHECK(e.p_hat == doctest::Approx(0.3));
  CHECK(e.std_err == doctest::Approx(std::sqrt(0.3 * 0.7 / 1000)));
  CHECK(e.ci_low <= e.p_hat);
  CHECK(e.p_hat <= e.ci_high);
  CHECK(e.seed == 5);
  const auto zero = MCEstimate::from_counts(0, 10, 1);
  CHECK(zero.ci_low == 0.0);
  CHECK(zero.std_err == 0.0);
  CHECK_THROWS_AS(MCEstimate::from_counts(0, 0, 1), Error);
}

TEST_CASE("mc_sup_tail examples") {
  const std::uint64_t n = 200000;
  const auto one = mc_sup_tail(CorrelationMatrix::identity(1), 0.0, n, 1);
  CHECK(std::abs(one.p_hat - 0.5) <= 4 * one.std_err);
  const auto two = mc_sup_tail(CorrelationMatrix::identity(2), 0.0, n, 2);
  CHECK(std::abs(two.p_hat - 0.75) <= 4 * two.std_err);
  const auto eq = mc_sup_tail(CorrelationMatrix::equicorrelated(2, 0.5), 1.0, n, 3);
  CHECK(std::abs(eq.p_hat - 0.25479641315325026904) <= 4 * eq.std_err);
  CHECK_THROWS_AS(mc_sup_tail(CorrelationMatrix::equicorrelated(3, 1.0), 1.0, 10, 1),
                  NotPositiveDefiniteError);
}

TEST_CASE("mc_sup_tail is identical for any worker count") {
  const auto m = CorrelationMatrix::equicorrelated(5, 0.3);
  const auto a = mc_sup_tail(m, 1.5, 50001, 99, 1);
  const auto b = mc_sup_tail(m, 1.5, 50001, 99, 3);
  const auto c = mc_sup_tail(m, 1.5, 50001, 99, 8);
  CHECK(a.p_hat == b.p_hat);
  CHECK(a.p_hat == c.p_hat);
}

TEST_CASE("orthant_prob_oracle examples") {
  const double zero[] = {0.0};
  CHECK(orthant_prob_oracle(CorrelationMatrix::identity(1), zero) == 0.5);
  const double zz[] = {0.0, 0.0};
  CHECK(orthant_prob_oracle(CorrelationMatrix::identity(2), zz) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::equicorrelated(2, 0.5), zz) - 1.0 / 3.0) <= 1e-10);
  // Classical orthant identity 1/4 + asin(r)/(2 pi) over a range of r.
  for (double r = -0.95; r < 0.96; r += 0.05) {
    const double expected = 0.25 + std::asin(r) / (2 * kPi);
    CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::equicorrelated(2, r), zz) - expected) <= 1e-10);
  }

  const double t1[] = {1.0, -0.5};
  CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::equicorrelated(2, 0.3), t1) -
                 0.28313842024448095291) <= 1e-10);
  const double t2[] = {0.2, 1.1};
  CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::equicorrelated(2, -0.7), t2) -
                 0.44923566524349745133) <= 1e-10);
  const CorrelationMatrix m3(Matrix::from_rows({{1, 0.3, 0.5}, {0.3, 1, -0.2}, {0.5, -0.2, 1}}));
  const double t3[] = {0.5, 1.0, -0.2};
  CHECK(std::abs(orthant_prob_oracle(m3, t3) - 0.29985989573996081687) <= 1e-9);

  const double inf = std::numeric_limits<double>::infinity();
  const double half_open[] = {0.7, inf};
  CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::equicorrelated(2, 0.4), half_open) -
                 std_normal_cdf(0.7)) <= 1e-12);
}

TEST_CASE("orthant_prob_oracle n=1 equals Phi") {
  for (double t = -6.0; t <= 6.0; t += 0.25) {
    const double th[] = {t};
    CHECK(std::abs(orthant_prob_oracle(CorrelationMatrix::identity(1), th) - std_normal_cdf(t)) <= 1e-12);
  }
}

TEST_CASE("orthant_prob_oracle errors") {
  const double four[] = {0, 0, 0, 0};
  CHECK_THROWS_AS(orthant_prob_oracle(CorrelationMatrix::identity(4), four), Error);
  const double three[] = {0, 0, 0};
  CHECK_THROWS_AS(orthant_prob_oracle(CorrelationMatrix::equicorrelated(3, 1.0), three),
                  NotPositiveDefiniteError);
  const double two[] = {0, 0};
  CHECK_THROWS_AS(orthant_prob_oracle(CorrelationMatrix::identity(3), two), Error);
}

TEST_CASE("orthant oracle agrees with Monte Carlo on random matrices") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  std::uniform_real_distribution<double> thr(-1.5, 2.0);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = dim(rng);
    const CorrelationMatrix m = random_correlation(rng, n);
    std::vector<double> t(n);
    for (auto& v : t) v = thr(rng);
    const double exact = orthant_prob_oracle(m, t);
    const auto mc = mc_exceedance(cholesky(m), t, 100000, 1000 + trial).complement();
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(mc.n_samples));
    CHECK(std::abs(exact - mc.p_hat) <= 4 * se + 1e-12);
  }
}
