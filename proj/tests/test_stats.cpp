#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "orthosync/errors.hpp"
#include "orthosync/rng.hpp"
#include "orthosync/stats.hpp"

using namespace orthosync;

namespace {

double chi2_density(int df, double x) {
  if (x <= 0.0) return 0.0;
  const double a = 0.5 * df;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) -
                  std::lgamma(a));
}

// Composite Simpson integration of the chi-squared density on [0, hi].
double chi2_cdf_quadrature(int df, double hi) {
  const int steps = 20000;  // even
  const double h = hi / steps;
  double acc = chi2_density(df, 0.0) + chi2_density(df, hi);
  for (int k = 1; k < steps; ++k)
    acc += chi2_density(df, k * h) * ((k % 2 == 1) ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace

TEST_CASE("chi2 quantile closed form at df=2") {
  CHECK(std::abs(stats::chi2_quantile(2, 0.95) - (-2.0 * std::log(0.05))) <=
        1e-10);
}

TEST_CASE("chi2 quantile df=10 against the quadrature oracle") {
  const double x = stats::chi2_quantile(10, 0.95);
  CHECK(x == doctest::Approx(18.307038053275146).epsilon(1e-9));
  CHECK(chi2_cdf_quadrature(10, x) == doctest::Approx(0.95).epsilon(1e-7));
}

TEST_CASE("chi2 quantile df=1 median equals the squared normal quartile") {
  const double z = stats::normal_quantile(0.75);
  CHECK(stats::chi2_quantile(1, 0.5) ==
        doctest::Approx(z * z).epsilon(1e-10));
  CHECK(stats::chi2_quantile(1, 0.5) ==
        doctest::Approx(0.454936423119573).epsilon(1e-9));
}

TEST_CASE("chi2 quantile is increasing in p and df") {
  for (int df : {1, 2, 5, 10, 45}) {
    double prev = 0.0;
    for (double p : {0.01, 0.1, 0.5, 0.9, 0.99}) {
      const double x = stats::chi2_quantile(df, p);
      CHECK(x > prev);
      prev = x;
      // Round trip through the CDF.
      CHECK(stats::chi2_cdf(df, x) == doctest::Approx(p).epsilon(1e-9));
    }
  }
  for (double p : {0.05, 0.5, 0.95}) {
    double prev = 0.0;
    for (int df : {1, 2, 3, 5, 10, 20, 45}) {
      const double x = stats::chi2_quantile(df, p);
      CHECK(x > prev);
      prev = x;
    }
  }
  CHECK_THROWS_AS(stats::chi2_quantile(2, 0.0), InvalidProbabilityError);
  CHECK_THROWS_AS(stats::chi2_quantile(2, 1.0), InvalidProbabilityError);
}

TEST_CASE("ks statistic of a single sample") {
  CHECK(stats::ks_statistic({0.5}) ==
        doctest::Approx(0.691462461274013).epsilon(1e-12));
  CHECK_THROWS_AS(stats::ks_statistic({}), SampleTooSmallError);
}

TEST_CASE("ks p-value is non-increasing in the statistic") {
  for (int m : {1, 10, 100}) {
    double prev = 1.0 + 1e-12;
    for (double d = 0.01; d <= 1.0; d += 0.01) {
      const double p = stats::ks_pvalue(d, m);
      CHECK(p <= prev + 1e-12);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      prev = p;
    }
  }
}

TEST_CASE("ks self test keeps the nominal rejection rate") {
  Rng rng(20240601);
  const int reps = 1000;
  const int m = 10000;
  int rejections = 0;
  std::vector<double> sample(m);
  for (int r = 0; r < reps; ++r) {
    for (int i = 0; i < m; ++i) sample[i] = rng.gaussian();
    const double d = stats::ks_statistic(sample);
    if (stats::ks_pvalue(d, m) < 0.05) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  CHECK(rate >= 0.03);
  CHECK(rate <= 0.07);
}
