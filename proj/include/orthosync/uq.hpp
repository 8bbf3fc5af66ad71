#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "orthosync/estimators.hpp"
#include "orthosync/model.hpp"

namespace orthosync {

// ||S S^T - C||_F^2 / (n (n-1) d^2).
double estimate_sigma2(const Observation& c, const BlockStack& s);

struct ConfidenceRegion {
  double alpha = 0.0;
  double sigma_hat = 0.0;
  int df = 0;                 // d(d-1)/2
  double c_value = 0.0;       // c_{1-alpha}
  double radius = 0.0;        // n^{-1/2} sigma_hat c_{1-alpha}
  double pair_c_value = 0.0;  // c_{1-alpha/2}, for Z_i Z_j^T regions
  double pair_radius = 0.0;
};

// c_{1-alpha} = sqrt(chi2_{d(d-1)/2, 1-alpha})
//             + C0 sigma_hat n^{-1/2} d (sqrt(d) + sqrt(log n))^2.
ConfidenceRegion confidence_region(const BlockStack& s, const Observation& c,
                                   double alpha, double c0);

// Ball membership test backing the region: Z_i Q is covered iff
// ||Z_i Q S_i^T - I||_F <= radius.
bool region_contains(const Eigen::MatrixXd& s_block,
                     const Eigen::MatrixXd& candidate, double radius);

struct ExpansionEntry {
  Eigen::MatrixXd first_order_residual;  // Zhat_i Q^T Z_i^T - I
  Eigen::MatrixXd skew_part;             // skew component of the residual
  double sym_residual_norm = 0.0;  // ||Zhat_i Q^T Z_i^T + Z_i Q Zhat_i^T - 2I||_F
  double coef_stat = 0.0;          // ||Zhat_i - Z_i Q||_F / sqrt(d(d-1))
};

struct ExpansionReport {
  int n = 0;
  int d = 0;
  double sigma = 0.0;
  double sigma_hat = 0.0;        // from estimate_sigma2 on the estimate
  double theoretical_coef = 0.0; // sigma sqrt(n-1) / (sqrt(2) n)
  Eigen::MatrixXd q;             // polar(Z^T estimate)
  std::vector<ExpansionEntry> blocks;
};

ExpansionReport expansion_report(const SyncProblem& problem,
                                 const BlockStack& estimate);

struct KsResult {
  double d_stat = 0.0;
  double p_value = 1.0;
};

enum class KsNormalization {
  kTrueSigma,      // verification mode, matches the known-noise setting
  kEstimatedSigma  // practical mode, uses sigma_hat from the report
};

// Per block, the d(d-1)/2 strictly-upper entries of
// sqrt(2) n / (sigma sqrt(n-1)) * (Zhat_i Q^T Z_i^T - I) tested against the
// standard normal.
std::vector<KsResult> ks_normality(
    const ExpansionReport& report,
    KsNormalization mode = KsNormalization::kTrueSigma);

enum class EstimatorKind { kMle, kSpectral };

struct CoverageParams {
  int n = 200;
  int d = 3;
  double sigma = 0.0;
  double alpha = 0.05;
  int trials = 1;
  std::uint64_t seed = 0;
  EstimatorKind estimator = EstimatorKind::kMle;
  std::vector<double> c0_values{1.0};
  int pair_sample = 50;  // disjoint pairs (0,1), (2,3), ...
  GpmOptions gpm;
};

struct CoverageResult {
  double c0 = 0.0;
  double block_coverage = 0.0;
  double pair_coverage = 0.0;
  double mean_radius = 0.0;
};

struct CoverageReport {
  std::vector<CoverageResult> per_c0;
  int trials_run = 0;
  double certified_fraction = 0.0;      // GPM certificates (MLE runs only)
  double median_sigma2_rel_error = 0.0; // median |sigma_hat^2/sigma^2 - 1|
};

CoverageReport coverage_experiment(const CoverageParams& params);

// CSV columns: block, sym_residual, coef_stat, ks_D, ks_p, covered, radius,
// sigma_hat.
void write_expansion_csv(const ExpansionReport& report,
                         const std::vector<KsResult>& ks, double radius,
                         const std::string& path, std::uint64_t seed);

}  // namespace orthosync
