#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "pairassoc/errors.hpp"
#include "pairassoc/normal.hpp"
#include "pairassoc/random_stream.hpp"

using namespace pairassoc;

namespace {

// Maclaurin series of erf in long double; accurate to ~1e-14 for |x| <= 3.6.
long double erf_series(long double x) {
  long double sum = 0.0L, term = x;
  for (int n = 0; n < 200; ++n) {
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
    term *= -x * x / (n + 1);
  }
  return 2.0L / std::sqrt(3.14159265358979323846264338327950288L) * sum;
}

double cdf_oracle(double z) {
  return static_cast<double>(0.5L * (1.0L + erf_series(z / std::sqrt(2.0L))));
}

double bisect_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal_cdf examples") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(normal_cdf(1.959964) - 0.975) < 1e-8);
  CHECK(std::abs(normal_cdf(1.959964) - 0.9750000009035576) < 1e-13);
  CHECK(std::abs(normal_cdf(-1.959964) - 0.025) < 1e-8);
}

TEST_CASE("normal_cdf agrees with a long-double erf series") {
  for (double z = -5.0; z <= 5.0; z += 0.0137) {
    CHECK(std::abs(normal_cdf(z) - cdf_oracle(z)) < 1e-12);
  }
}

TEST_CASE("normal_cdf is monotone and saturates") {
  double prev = 0.0;
  for (double z = -40.0; z <= 40.0; z += 0.01) {
    const double v = normal_cdf(z);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(normal_cdf(-100.0) == 0.0);
  CHECK(normal_cdf(100.0) == 1.0);
  CHECK(normal_sf(10.0) == doctest::Approx(7.61985302416052606e-24).epsilon(1e-12));
}

TEST_CASE("normal_quantile examples") {
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(std::abs(normal_quantile(0.975) - 1.959964) < 1e-6);
  CHECK(std::abs(normal_quantile(0.975) - bisect_quantile(0.975)) < 1e-9);
  CHECK(std::abs(normal_quantile(0.2) - (-0.841621)) < 1e-6);
  CHECK(std::abs(normal_quantile(0.2) - bisect_quantile(0.2)) < 1e-9);
  CHECK(normal_quantile(0.975) == doctest::Approx(kZ975).epsilon(1e-15));
}

TEST_CASE("normal_quantile rejects the closed endpoints") {
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(-0.1), ValidationError);
  CHECK_THROWS_AS(normal_quantile(std::nan("")), ValidationError);
}

TEST_CASE("quantile round trip over [1e-15, 1 - 1e-15]") {
  RandomStream s(7, {1});
  for (int i = 0; i < 1000; ++i) {
    const double p = s.uniform_open();
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-9);
  }
  for (double p : {1e-15, 1e-12, 1e-9, 1e-6, 0.5, 1 - 1e-6, 1 - 1e-9, 1 - 1e-12, 1 - 1e-15}) {
    CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-9);
  }
}

TEST_CASE("normal_quantile against bisection on a grid") {
  for (double p = 0.001; p < 1.0; p += 0.0173) {
    CHECK(std::abs(normal_quantile(p) - bisect_quantile(p)) < 1e-9);
  }
  for (double p : {1e-15, 1e-10, 1e-5}) {
    const double q = normal_quantile(p);
    CHECK(std::abs(q - bisect_quantile(p)) < 1e-9 * std::max(1.0, std::abs(q)));
  }
}

TEST_CASE("logistic examples and symmetry") {
  CHECK(logistic(0.0) == 0.5);
  CHECK(std::abs(logistic(3.0) - 0.952574) < 1e-6);
  CHECK(std::abs(logistic(3.0) - 1.0 / (1.0 + std::exp(-3.0))) < 1e-16);
  CHECK(std::abs(logistic(-3.0) - 0.047426) < 1e-6);
  for (double t = -30.0; t <= 30.0; t += 0.25) {
    CHECK(std::abs(logistic(t) + logistic(-t) - 1.0) < 1e-15);
  }
  CHECK(logistic(-800.0) >= 0.0);
  CHECK(logistic(800.0) == 1.0);
  double prev = 0.0;
  for (double t = -40.0; t <= 40.0; t += 0.1) {
    CHECK(logistic(t) >= prev);
    prev = logistic(t);
  }
}

TEST_CASE("random streams are reproducible and path-addressed") {
  RandomStream a(42, {1, 2, 3}), b(42, {1, 2, 3}), c(42, {1, 2, 4}), d(43, {1, 2, 3});
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
    vd.push_back(d.next_u64());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);

  RandomStream parent(42, {1, 2});
  RandomStream child = parent.child(3);
  RandomStream direct(42, {1, 2, 3});
  CHECK(child.next_u64() == direct.next_u64());
}

TEST_CASE("independent substreams pass a uniformity and correlation smoke test") {
  const int n = 200000;
  RandomStream a(9, {0}), b(9, {1});
  std::vector<int> bins(20, 0);
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (int i = 0; i < n; ++i) {
    const double u = a.uniform(), v = b.uniform();
    CHECK_UNARY(u >= 0.0);
    CHECK_UNARY(u < 1.0);
    ++bins[static_cast<int>(u * 20)];
    sa += u;
    sb += v;
    sab += u * v;
    saa += u * u;
    sbb += v * v;
  }
  double chi2 = 0.0;
  for (int c : bins) chi2 += (c - n / 20.0) * (c - n / 20.0) / (n / 20.0);
  CHECK(chi2 < 43.8);  // 99.9% point of chi-square with 19 df
  const double cov = sab / n - (sa / n) * (sb / n);
  const double corr = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("uniform_index is unbiased and shuffle is a permutation") {
  RandomStream s(5, {});
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[s.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  s.shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(50);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
  CHECK(v != expect);
}

TEST_CASE("bivariate_normal examples") {
  SUBCASE("corr = 1 gives equal coordinates") {
    RandomStream s(1, {});
    for (int i = 0; i < 1000; ++i) {
      const auto [x, y] = bivariate_normal({0, 0}, {1, 1}, 1.0, s);
      CHECK(x == y);
    }
  }
  SUBCASE("moments over 1e6 draws") {
    auto moments = [](std::pair<double, double> mean, std::pair<double, double> sd, double corr) {
      RandomStream s(2, {static_cast<std::uint64_t>(corr * 100)});
      const int n = 1000000;
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < n; ++i) {
        const auto [x, y] = bivariate_normal(mean, sd, corr, s);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
      }
      const double mx = sx / n, my = sy / n;
      const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
      return std::array<double, 5>{mx, my, std::sqrt(vx), std::sqrt(vy),
                                   (sxy / n - mx * my) / std::sqrt(vx * vy)};
    };
    const auto m0 = moments({0, 0}, {1, 1}, 0.0);
    CHECK(std::abs(m0[4]) < 0.005);
    const auto m1 = moments({2, -1}, {3, 0.5}, 0.5);
    CHECK(std::abs(m1[0] - 2) < 0.01);
    CHECK(std::abs(m1[1] + 1) < 0.01);
    CHECK(std::abs(m1[2] - 3) < 0.01);
    CHECK(std::abs(m1[3] - 0.5) < 0.005);
    CHECK(std::abs(m1[4] - 0.5) < 0.005);
  }
  SUBCASE("domain errors") {
    RandomStream s(1, {});
    CHECK_THROWS_AS(bivariate_normal({0, 0}, {0, 1}, 0.0, s), ValidationError);
    CHECK_THROWS_AS(bivariate_normal({0, 0}, {1, -1}, 0.0, s), ValidationError);
    CHECK_THROWS_AS(bivariate_normal({0, 0}, {1, 1}, 1.5, s), ValidationError);
  }
}
