#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "orthosync/model.hpp"

namespace orthosync {

struct ExperimentConfig {
  int n = 200;
  int d = 3;
  int trials = 5;
  std::vector<double> sigma_grid;  // C_sigma values, sigma = C_sigma sqrt(n/d)
  std::uint64_t seed = 12345;
  bool run_mle = true;
  bool run_spectral = true;
  int gpm_max_iters = 100;
  std::vector<double> alphas{0.05};  // alphas[0] drives the covered column
  double c0 = 1.0;
  int workers = 0;  // 0 = OpenMP default
  bool with_newton = true;

  // n=200, d=3, 5 trials on the 0.05..0.5 grid.
  static ExperimentConfig desk_scale();
  // n=800, d=5, 1 trial on the same grid.
  static ExperimentConfig paper_scale();

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

struct ResultRow {
  double c_sigma = 0.0;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  std::string estimator;  // "mle" | "spectral"
  int block = 0;
  bool certified = false;
  double dist_f = 0.0;
  double sym_residual = 0.0;
  double coef_stat = 0.0;
  double fo_residual = 0.0;  // ||Zhat_i Q^T Z_i^T - I||_F, the coverage test statistic
  double ks_d = 0.0;   // NaN when sigma = 0
  double ks_p = 0.0;   // NaN when sigma = 0
  int covered = 0;     // ball test at alphas[0]
  double radius = 0.0;
  double sigma_hat = 0.0;
  double newton_gap_v = 0.0;  // NaN when disabled or failed
  double newton_gap_closed = 0.0;
  double newton_gap_z = 0.0;
  std::string newton_error;   // empty when ok
};

struct TrialFailure {
  double c_sigma = 0.0;
  int trial = 0;
  std::string message;
};

struct ResultTable {
  ExperimentConfig config;
  std::vector<ResultRow> rows;  // (grid, trial, estimator, block) order
  std::vector<TrialFailure> failures;
  int trials_attempted = 0;
};

// One pass per (grid point, trial): generate, estimate with both methods,
// align, expansion statistics, KS, coverage, Newton gaps. Per-trial seeds
// come from derive_seed(config.seed, grid_index, trial_index); failures are
// recorded as rows in `failures`, never aborting the sweep. Deterministic in
// (config, seed) regardless of worker count.
ResultTable run_experiment(const ExperimentConfig& config);

// Type-7 (linear interpolation) quantile of unsorted values.
double quantile_type7(std::vector<double> values, double p);

struct BoxplotSummary {
  double c_sigma = 0.0;
  int count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double whisker_lo = 0.0;  // smallest value within 1.5 IQR of q25
  double whisker_hi = 0.0;
  int outliers = 0;
};

BoxplotSummary summarize_values(const std::vector<double>& values);

// Statistics: sym_residual, coef_stat, ks_p, ks_d, newton_gap_v,
// newton_gap_z, dist_f. Rows with non-finite entries are skipped; grid
// points with no usable rows are dropped. Throws EmptySelectionError when
// nothing matches.
std::vector<BoxplotSummary> summarize(const ResultTable& table,
                                      const std::string& statistic,
                                      const std::string& estimator);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log(median) against log(C_sigma). Throws
// DegenerateFitError for fewer than 3 points or non-positive medians.
SlopeFit fit_loglog_slope(const std::vector<BoxplotSummary>& series);

struct CoverageSummaryRow {
  double c_sigma = 0.0;
  std::string estimator;
  double alpha = 0.0;
  double block_coverage = 0.0;
  double pair_coverage = 0.0;
  double mean_radius = 0.0;
};

// Empirical coverage per (grid point, estimator, alpha), recomputed from the
// stored per-block residuals and per-trial sigma_hat. Pairs are the disjoint
// (2k, 2k+1) blocks.
std::vector<CoverageSummaryRow> coverage_table(const ResultTable& table);
void write_coverage_csv(const std::vector<CoverageSummaryRow>& rows,
                        const std::string& path, std::uint64_t seed);

// sigma sqrt(n-1) / (sqrt(2) n) with sigma = c_sigma sqrt(n/d).
double theoretical_first_order_coef(int n, int d, double c_sigma);

std::string result_table_to_csv(const ResultTable& table);
void write_result_table_csv(const ResultTable& table, const std::string& path);
// Summary plus the predicted first-order coefficient per grid point.
void write_coef_summary_csv(const std::vector<BoxplotSummary>& series, int n,
                            int d, const std::string& estimator,
                            const std::string& path, std::uint64_t seed);
void write_summary_csv(const std::vector<BoxplotSummary>& series,
                       const std::string& statistic, const std::string& estimator,
                       const std::string& path, std::uint64_t seed);
void write_summary_json(const std::vector<BoxplotSummary>& series,
                        const std::string& statistic, const std::string& estimator,
                        const std::string& path, std::uint64_t seed);

std::uint64_t fnv1a_hash(const std::string& text);

}  // namespace orthosync
