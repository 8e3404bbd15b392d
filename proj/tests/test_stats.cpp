#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ebwtpc/stats.hpp"
#include "support/bigrational.hpp"

using namespace ebwtpc;

TEST_CASE("lambda: error-free case, the 0.824 ratio, chr22-scale coverage") {
  // eps = 0: lambda = m (r-k)/n exactly, linear in t.
  for (int k : {1, 10, 50}) {
    PoissonModel m{1000, 50000, 100, 0.0, k, 1};
    CHECK(lambda(m) == doctest::Approx(1000.0 * (100.0 - k) / 50000.0).epsilon(1e-12));
    PoissonModel m3 = m;
    m3.t = 3;
    CHECK(lambda(m3) == doctest::Approx(3 * lambda(m)).epsilon(1e-12));
  }

  // k=16, eps=0.0012, r=100: lambda/lambda' = 0.84 * (1-eps)^16 ~ 0.824016
  // (the displayed formula, not the text's 84% rounding).
  PoissonModel m{1000000, 3000000, 100, 0.0012, 16, 1};
  double ratio = lambda(m) / lambda_prime(m);
  CHECK(ratio == doctest::Approx(0.8240163).epsilon(1e-6));
  CHECK(ratio < 0.84);

  // m = 15e6 reads of length 100 over chromosome-22-length genome: ~29.5x.
  PoissonModel chr{15000000.0, 50818468.0, 100, 0.0012, 16, 1};
  CHECK(lambda_prime(chr) == doctest::Approx(29.5167).epsilon(1e-4));

  PoissonModel bad = m;
  bad.k = 100;
  CHECK_THROWS_AS(lambda(bad), std::domain_error);
}

TEST_CASE("lambda monotonicity: decreasing in k and epsilon, linear in m and t") {
  PoissonModel base{50000, 200000, 100, 0.001, 10, 1};
  double l0 = lambda(base);
  for (int k = 11; k < 99; k += 7) {
    PoissonModel m = base;
    m.k = k;
    double l = lambda(m);
    CHECK(l < l0);
    l0 = l;
  }
  l0 = lambda(base);
  for (double e : {0.002, 0.01, 0.1, 0.5}) {
    PoissonModel m = base;
    m.epsilon = e;
    double l = lambda(m);
    CHECK(l < l0);
    l0 = l;
  }
  PoissonModel m2 = base;
  m2.m *= 3;
  CHECK(lambda(m2) == doctest::Approx(3 * lambda(base)).epsilon(1e-12));
}

TEST_CASE("poisson_cdf closed forms and monotonicity") {
  CHECK(poisson_cdf(1.0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(poisson_cdf(2.0, 2) == doctest::Approx(5.0 * std::exp(-2.0)).epsilon(1e-12));
  double prev = 0.0;
  for (long z = 0; z <= 60; ++z) {
    double v = poisson_cdf(7.5, z);
    CHECK(v >= prev);
    CHECK(v <= 1.0);
    prev = v;
  }
  CHECK(poisson_cdf(7.5, 200) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(poisson_cdf(3.0, -1) == 0.0);
}

TEST_CASE("poisson_cdf agrees with the exact rational oracle") {
  // The full grid lives in the acceptance suite; spot checks here.
  for (double mu : {0.25, 1.0, 4.5, 24.3, 77.0}) {
    for (long z : {0L, 1L, 5L, 30L, 120L}) {
      double fast = poisson_cdf(mu, z);
      double exact = testutil::poisson_cdf_exact(mu, z);
      CHECK(std::fabs(fast - exact) <= 1e-12);
    }
  }
}

TEST_CASE("cluster_length_band: tail bounds hold and the band tightens with alpha") {
  PoissonModel model{52000, 100000, 100, 0.0012, 16, 1};
  double lam = lambda(model);
  auto [lo, hi] = cluster_length_band(model, 0.05);
  CHECK(lo <= hi);
  CHECK(poisson_cdf(lam, lo - 1) <= 0.025);
  CHECK(1.0 - poisson_cdf(lam, hi) <= 0.025);
  // One step tighter on each side crosses the tail budget.
  CHECK(poisson_cdf(lam, lo) > 0.025);
  CHECK(1.0 - poisson_cdf(lam, hi - 1) > 0.025);

  long prev_width = hi - lo;
  for (double alpha : {0.1, 0.2, 0.5, 0.9}) {
    auto [l, h] = cluster_length_band(model, alpha);
    CHECK(h - l <= prev_width);
    prev_width = h - l;
  }

  // lambda = 24.3 band via direct summation.
  auto [lo2, hi2] = poisson_band(24.3, 0.05);
  CHECK(poisson_cdf(24.3, lo2 - 1) <= 0.025);
  CHECK(1.0 - poisson_cdf(24.3, hi2) <= 0.025);

  // Degenerate small-lambda behavior: lo collapses to 0.
  auto [lo3, hi3] = poisson_band(1.0, 0.05);
  CHECK(lo3 == 0);
  CHECK(hi3 == 3);
}

TEST_CASE("condition2_lower_bound: range, eps=0 degeneration, delta sweep") {
  PoissonModel model{26000, 50818468.0 / 2, 100, 0.0012, 11, 1};
  model.m = 44.0 * model.n / model.r;  // lambda' = 44
  for (long d : {0L, 5L, 20L, 60L}) {
    double b = condition2_lower_bound(model, d);
    CHECK(b >= 0.0);
    CHECK(b <= 1.0);
  }
  CHECK_THROWS_AS(condition2_lower_bound(model, -1), std::invalid_argument);

  PoissonModel clean = model;
  clean.epsilon = 0.0;
  for (long d : {0L, 3L, 12L}) {
    double lam = lambda(clean);
    long y = static_cast<long>(std::ceil(lam)) + d;
    CHECK(condition2_lower_bound(clean, d) == doctest::Approx(poisson_cdf(lam, y)).epsilon(1e-12));
  }

  // Paper-scale numeric check: r=100, eps=0.0012, lambda'=44, k=11 -> >= 0.93.
  auto [best, best_delta] = condition2_lower_bound_max(model);
  CHECK(best >= 0.93);
  CHECK(best_delta > 0);

  // Sweep report: unimodal-looking in delta on this grid (informational).
  double prev = condition2_lower_bound(model, 0);
  bool rising = true;
  int direction_changes = 0;
  for (long d = 1; d <= 60; ++d) {
    double cur = condition2_lower_bound(model, d);
    bool now_rising = cur >= prev;
    if (now_rising != rising) {
      ++direction_changes;
      rising = now_rising;
    }
    prev = cur;
  }
  CHECK(direction_changes <= 1);
}
