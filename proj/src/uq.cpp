#include "orthosync/uq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "orthosync/errors.hpp"
#include "orthosync/kernels.hpp"
#include "orthosync/manifold.hpp"
#include "orthosync/rng.hpp"
#include "orthosync/stats.hpp"

namespace orthosync {

namespace {

// Absolute slack on the ball test so exact-recovery runs, where both the
// residual and the radius are pure roundoff, still count as covered.
constexpr double kCoverageSlack = 1e-9;

}  // namespace

double estimate_sigma2(const Observation& c, const BlockStack& s) {
  const double n = static_cast<double>(s.n);
  const double d = static_cast<double>(s.d);
  return kernels::gram_residual_sqnorm(c, s) / (n * (n - 1.0) * d * d);
}

ConfidenceRegion confidence_region(const BlockStack& s, const Observation& c,
                                   double alpha, double c0) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidProbabilityError("confidence_region: alpha must be in (0, 1)");
  const int n = s.n;
  const int d = s.d;
  ConfidenceRegion out;
  out.alpha = alpha;
  out.df = d * (d - 1) / 2;
  out.sigma_hat = std::sqrt(estimate_sigma2(c, s));
  const double slack = c0 * out.sigma_hat / std::sqrt(static_cast<double>(n)) *
                       d * std::pow(std::sqrt(static_cast<double>(d)) +
                                        std::sqrt(std::log(static_cast<double>(n))),
                                    2.0);
  out.c_value = std::sqrt(stats::chi2_quantile(out.df, 1.0 - alpha)) + slack;
  out.radius = out.sigma_hat / std::sqrt(static_cast<double>(n)) * out.c_value;
  out.pair_c_value =
      std::sqrt(stats::chi2_quantile(out.df, 1.0 - alpha / 2.0)) + slack;
  out.pair_radius =
      out.sigma_hat / std::sqrt(static_cast<double>(n)) * out.pair_c_value;
  return out;
}

bool region_contains(const Eigen::MatrixXd& s_block,
                     const Eigen::MatrixXd& candidate, double radius) {
  const Eigen::Index d = s_block.cols();
  return (candidate * s_block.transpose() - Eigen::MatrixXd::Identity(d, d))
             .norm() <= radius;
}

ExpansionReport expansion_report(const SyncProblem& problem,
                                 const BlockStack& estimate) {
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  ExpansionReport report;
  report.n = n;
  report.d = d;
  report.sigma = problem.sigma;
  report.sigma_hat = std::sqrt(estimate_sigma2(problem.observation, estimate));
  report.theoretical_coef = problem.sigma *
                            std::sqrt(static_cast<double>(n) - 1.0) /
                            (std::sqrt(2.0) * n);
  report.q = manifold::polar(problem.truth.data.transpose() * estimate.data);

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  const double denom = std::sqrt(static_cast<double>(d) * (d - 1));
  report.blocks.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd m =
        estimate.block(i) * report.q.transpose() * problem.truth.block(i).transpose();
    ExpansionEntry& entry = report.blocks[i];
    entry.first_order_residual = m - eye;
    entry.skew_part = 0.5 * (m - m.transpose());
    entry.sym_residual_norm = (m + m.transpose() - 2.0 * eye).norm();
    entry.coef_stat =
        (estimate.block(i) - problem.truth.block(i) * report.q).norm() / denom;
  }
  return report;
}

std::vector<KsResult> ks_normality(const ExpansionReport& report,
                                   KsNormalization mode) {
  const int d = report.d;
  const int m = d * (d - 1) / 2;
  if (m < 1) throw SampleTooSmallError("ks_normality: d(d-1)/2 < 1");
  const double sigma_used = (mode == KsNormalization::kTrueSigma)
                                ? report.sigma
                                : report.sigma_hat;
  if (!(sigma_used > 0.0))
    throw InvalidSigmaError("ks_normality: normalizing sigma must be > 0");
  const double factor = std::sqrt(2.0) * report.n /
                        (sigma_used * std::sqrt(static_cast<double>(report.n) - 1.0));

  std::vector<KsResult> out(report.blocks.size());
  for (std::size_t i = 0; i < report.blocks.size(); ++i) {
    std::vector<double> samples;
    samples.reserve(m);
    const Eigen::MatrixXd& r = report.blocks[i].first_order_residual;
    for (int p = 0; p < d; ++p)
      for (int q = p + 1; q < d; ++q) samples.push_back(factor * r(p, q));
    out[i].d_stat = stats::ks_statistic(std::move(samples));
    out[i].p_value = stats::ks_pvalue(out[i].d_stat, m);
  }
  return out;
}

CoverageReport coverage_experiment(const CoverageParams& params) {
  if (params.trials < 1)
    throw InvalidDimsError("coverage_experiment: trials must be >= 1");
  const int trials = params.trials;
  const int num_c0 = static_cast<int>(params.c0_values.size());

  struct TrialCounts {
    std::vector<int> blocks_covered;
    std::vector<int> pairs_covered;
    std::vector<double> radius;
    double sigma2_rel_err = 0.0;
    bool certified = false;
    int pairs_total = 0;
  };
  std::vector<TrialCounts> counts(trials);
  std::string first_error;

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < trials; ++t) {
   try {
    const SyncProblem problem = make_problem(
        params.n, params.d, params.sigma, derive_seed(params.seed, 2, t));
    const SpectralSolution spec = spectral_estimate(problem);
    BlockStack stack = spec.z_eig;
    bool certified = true;
    if (params.estimator == EstimatorKind::kMle) {
      const MleSolution mle = gpm_estimate(problem, spec.z_eig, params.gpm);
      stack = mle.z_hat;
      certified = mle.certified;
    }

    TrialCounts& tc = counts[t];
    tc.certified = certified;
    tc.blocks_covered.assign(num_c0, 0);
    tc.pairs_covered.assign(num_c0, 0);
    tc.radius.assign(num_c0, 0.0);
    const double sigma2_hat = estimate_sigma2(problem.observation, stack);
    tc.sigma2_rel_err = (params.sigma > 0.0)
                            ? std::abs(sigma2_hat / (params.sigma * params.sigma) - 1.0)
                            : 0.0;

    const Eigen::MatrixXd q =
        manifold::polar(problem.truth.data.transpose() * stack.data);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(params.d, params.d);
    std::vector<double> residual(params.n);
    for (int i = 0; i < params.n; ++i) {
      residual[i] = (problem.truth.block(i) * q * stack.block(i).transpose() - eye)
                        .norm();
    }

    const int num_pairs = std::min(params.pair_sample, params.n / 2);
    tc.pairs_total = num_pairs;
    for (int k = 0; k < num_c0; ++k) {
      const ConfidenceRegion cr = confidence_region(
          stack, problem.observation, params.alpha, params.c0_values[k]);
      tc.radius[k] = cr.radius;
      for (int i = 0; i < params.n; ++i)
        if (residual[i] <= cr.radius + kCoverageSlack) ++tc.blocks_covered[k];
      for (int p = 0; p < num_pairs; ++p) {
        const int i = 2 * p;
        const int j = 2 * p + 1;
        if (residual[i] <= cr.pair_radius + kCoverageSlack &&
            residual[j] <= cr.pair_radius + kCoverageSlack)
          ++tc.pairs_covered[k];
      }
    }
   } catch (const std::exception& e) {
#pragma omp critical
    if (first_error.empty()) first_error = e.what();
   }
  }
  if (!first_error.empty())
    throw std::runtime_error("coverage_experiment: trial failed: " + first_error);

  CoverageReport report;
  report.trials_run = trials;
  report.per_c0.resize(num_c0);
  std::vector<double> rel_errors(trials);
  int certified = 0;
  long long pairs_total = 0;
  for (int t = 0; t < trials; ++t) {
    rel_errors[t] = counts[t].sigma2_rel_err;
    if (counts[t].certified) ++certified;
    pairs_total += counts[t].pairs_total;
  }
  for (int k = 0; k < num_c0; ++k) {
    long long blocks = 0, pairs = 0;
    double radius_sum = 0.0;
    for (int t = 0; t < trials; ++t) {
      blocks += counts[t].blocks_covered[k];
      pairs += counts[t].pairs_covered[k];
      radius_sum += counts[t].radius[k];
    }
    CoverageResult& r = report.per_c0[k];
    r.c0 = params.c0_values[k];
    r.block_coverage =
        static_cast<double>(blocks) / (static_cast<double>(trials) * params.n);
    r.pair_coverage = pairs_total > 0
                          ? static_cast<double>(pairs) / static_cast<double>(pairs_total)
                          : 1.0;
    r.mean_radius = radius_sum / trials;
  }
  report.certified_fraction = static_cast<double>(certified) / trials;
  std::sort(rel_errors.begin(), rel_errors.end());
  report.median_sigma2_rel_error =
      (trials % 2 == 1)
          ? rel_errors[trials / 2]
          : 0.5 * (rel_errors[trials / 2 - 1] + rel_errors[trials / 2]);
  return report;
}

void write_expansion_csv(const ExpansionReport& report,
                         const std::vector<KsResult>& ks, double radius,
                         const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << seed << "\n";
  out << "block,sym_residual,coef_stat,ks_D,ks_p,covered,radius,sigma_hat\n";
  for (std::size_t i = 0; i < report.blocks.size(); ++i) {
    const auto& b = report.blocks[i];
    const bool have_ks = i < ks.size();
    const bool covered = b.first_order_residual.norm() <= radius + kCoverageSlack;
    out << i << ',' << b.sym_residual_norm << ',' << b.coef_stat << ',';
    if (have_ks)
      out << ks[i].d_stat << ',' << ks[i].p_value << ',';
    else
      out << ",,";
    out << (covered ? 1 : 0) << ',' << radius << ',' << report.sigma_hat << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace orthosync
