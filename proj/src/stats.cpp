#include "orthosync/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "orthosync/errors.hpp"

namespace orthosync::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Peter Acklam's rational approximation, |relative error| < 1.15e-9; one
// Halley step against the exact CDF brings it to machine precision.
double normal_quantile_approx(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int k = 1; k < 1000; ++k) {
    term *= x / (a + k);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for the upper tail Q(a, x).
double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k < 1000; ++k) {
    const double an = -k * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double chi2_pdf(int df, double x) {
  if (x <= 0.0) return 0.0;
  const double a = 0.5 * df;
  return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) -
                  std::lgamma(a));
}

}  // namespace

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw InvalidProbabilityError("normal_quantile: p must be in (0, 1)");
  double x = normal_quantile_approx(p);
  // One Halley refinement.
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double regularized_gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_contfrac(a, x);
}

double chi2_cdf(int df, double x) {
  if (x <= 0.0) return 0.0;
  return regularized_gamma_p(0.5 * df, 0.5 * x);
}

double chi2_quantile(int df, double p) {
  if (df < 1) throw InvalidDimsError("chi2_quantile: df must be >= 1");
  if (!(p > 0.0 && p < 1.0))
    throw InvalidProbabilityError("chi2_quantile: p must be in (0, 1)");

  // Wilson-Hilferty start, then safeguarded Newton.
  const double z = normal_quantile(p);
  const double t = 2.0 / (9.0 * df);
  double x = df * std::pow(1.0 - t + z * std::sqrt(t), 3.0);
  if (!(x > 0.0)) x = 0.5 * df;

  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < 200; ++iter) {
    const double f = chi2_cdf(df, x) - p;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double deriv = chi2_pdf(df, x);
    double next = (deriv > 0.0) ? x - f / deriv : x;
    if (!(next > lo && (next < hi))) {
      next = std::isinf(hi) ? 2.0 * x : 0.5 * (lo + hi);
    }
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, x) && iter >= 2) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

double ks_statistic(std::vector<double> samples) {
  if (samples.empty())
    throw SampleTooSmallError("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = normal_cdf(samples[i]);
    d = std::max(d, cdf - static_cast<double>(i) / m);
    d = std::max(d, static_cast<double>(i + 1) / m - cdf);
  }
  return d;
}

double ks_pvalue(double d, int m) {
  if (m < 1) throw SampleTooSmallError("ks_pvalue: m must be >= 1");
  const double sm = std::sqrt(static_cast<double>(m));
  const double lambda = (sm + 0.12 + 0.11 / sm) * d;
  if (lambda < 0.06) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 1000; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace orthosync::stats
