#pragma once

#include <vector>

namespace orthosync::stats {

double normal_cdf(double x);
double normal_quantile(double p);

// Regularized lower incomplete gamma P(a, x): series for x < a + 1, Lentz
// continued fraction otherwise.
double regularized_gamma_p(double a, double x);

double chi2_cdf(int df, double x);

// (1 - alpha)-quantile inversion by safeguarded Newton, absolute tolerance
// well below 1e-10. Throws InvalidProbabilityError unless 0 < p < 1.
double chi2_quantile(int df, double p);

// Kolmogorov-Smirnov distance of a sample against the standard normal CDF.
// Throws SampleTooSmallError on an empty sample.
double ks_statistic(std::vector<double> samples);

// Asymptotic Kolmogorov p-value with the small-sample correction
// lambda = (sqrt(m) + 0.12 + 0.11/sqrt(m)) * d.
double ks_pvalue(double d, int m);

}  // namespace orthosync::stats
