#include "orthosync/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "orthosync/errors.hpp"
#include "orthosync/estimators.hpp"
#include "orthosync/manifold.hpp"
#include "orthosync/newton.hpp"
#include "orthosync/rng.hpp"
#include "orthosync/stats.hpp"
#include "orthosync/uq.hpp"

namespace orthosync {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
// Matches the slack used by coverage_experiment.
constexpr double kCoverSlack = 1e-9;

std::vector<double> default_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.05 * k);
  return grid;
}

}  // namespace

ExperimentConfig ExperimentConfig::desk_scale() {
  ExperimentConfig c;
  c.n = 200;
  c.d = 3;
  c.trials = 5;
  c.sigma_grid = default_grid();
  return c;
}

ExperimentConfig ExperimentConfig::paper_scale() {
  ExperimentConfig c;
  c.n = 800;
  c.d = 5;
  c.trials = 1;
  c.sigma_grid = default_grid();
  return c;
}

void ExperimentConfig::validate() const {
  if (n < 2 || d < 2) throw InvalidDimsError("config: need n >= 2, d >= 2");
  if (trials < 1) throw InvalidDimsError("config: trials must be >= 1");
  if (sigma_grid.empty()) throw EmptySelectionError("config: empty sigma grid");
  for (double c : sigma_grid)
    if (!(c >= 0.0 && c <= 0.5))
      throw InvalidSigmaError("config: C_sigma values must lie in [0, 0.5]");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0))
      throw InvalidProbabilityError("config: alpha values must lie in (0, 1)");
  if (!run_mle && !run_spectral)
    throw EmptySelectionError("config: no estimator selected");
}

namespace {

using nlohmann::json;

void apply_json(ExperimentConfig& c, const json& j) {
  if (j.contains("n")) c.n = j["n"].get<int>();
  if (j.contains("d")) c.d = j["d"].get<int>();
  if (j.contains("trials")) c.trials = j["trials"].get<int>();
  if (j.contains("sigma_grid"))
    c.sigma_grid = j["sigma_grid"].get<std::vector<double>>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("estimators")) {
    c.run_mle = false;
    c.run_spectral = false;
    for (const auto& name : j["estimators"]) {
      if (name == "mle") c.run_mle = true;
      else if (name == "spectral") c.run_spectral = true;
      else throw EmptySelectionError("config: unknown estimator " +
                                     name.get<std::string>());
    }
  }
  if (j.contains("gpm_max_iters")) c.gpm_max_iters = j["gpm_max_iters"].get<int>();
  if (j.contains("alphas")) c.alphas = j["alphas"].get<std::vector<double>>();
  if (j.contains("c0")) c.c0 = j["c0"].get<double>();
  if (j.contains("workers")) c.workers = j["workers"].get<int>();
  if (j.contains("with_newton")) c.with_newton = j["with_newton"].get<bool>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  ExperimentConfig c = ExperimentConfig::desk_scale();
  json j = json::parse(json_text);
  apply_json(c, j);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["n"] = c.n;
  j["d"] = c.d;
  j["trials"] = c.trials;
  j["sigma_grid"] = c.sigma_grid;
  j["seed"] = c.seed;
  std::vector<std::string> estimators;
  if (c.run_mle) estimators.push_back("mle");
  if (c.run_spectral) estimators.push_back("spectral");
  j["estimators"] = estimators;
  j["gpm_max_iters"] = c.gpm_max_iters;
  j["alphas"] = c.alphas;
  j["c0"] = c.c0;
  j["workers"] = c.workers;
  j["with_newton"] = c.with_newton;
  j["rng"] = Rng::kLabel;
  return j.dump(2);
}

namespace {

struct TrialOutput {
  std::vector<ResultRow> rows;
  std::optional<TrialFailure> failure;
};

void append_estimator_rows(TrialOutput& out, const SyncProblem& problem,
                           const BlockStack& stack, const char* name,
                           bool certified, double c_sigma, int trial,
                           std::uint64_t trial_seed, double alpha, double c0,
                           const std::vector<NewtonReportRow>* newton) {
  const int n = problem.truth.n;
  const ExpansionReport report = expansion_report(problem, stack);
  std::vector<KsResult> ks;
  if (problem.sigma > 0.0) ks = ks_normality(report);
  const ConfidenceRegion cr =
      confidence_region(stack, problem.observation, alpha, c0);
  const Alignment alignment = frobenius_block_distance(stack, problem.truth);

  for (int i = 0; i < n; ++i) {
    ResultRow row;
    row.c_sigma = c_sigma;
    row.trial = trial;
    row.trial_seed = trial_seed;
    row.estimator = name;
    row.block = i;
    row.certified = certified;
    row.dist_f = alignment.distance;
    row.sym_residual = report.blocks[i].sym_residual_norm;
    row.coef_stat = report.blocks[i].coef_stat;
    row.fo_residual = report.blocks[i].first_order_residual.norm();
    row.ks_d = ks.empty() ? kNan : ks[i].d_stat;
    row.ks_p = ks.empty() ? kNan : ks[i].p_value;
    row.covered = row.fo_residual <= cr.radius + kCoverSlack ? 1 : 0;
    row.radius = cr.radius;
    row.sigma_hat = report.sigma_hat;
    if (newton != nullptr) {
      const NewtonReportRow& nr = (*newton)[i];
      row.newton_gap_v = nr.ok ? nr.entry.gap_v : kNan;
      row.newton_gap_closed = nr.ok ? nr.entry.gap_v_closed : kNan;
      row.newton_gap_z = nr.ok ? nr.entry.gap_z : kNan;
      row.newton_error = nr.error;
    } else {
      row.newton_gap_v = kNan;
      row.newton_gap_closed = kNan;
      row.newton_gap_z = kNan;
    }
    out.rows.push_back(std::move(row));
  }
}

TrialOutput run_trial(const ExperimentConfig& config, int grid_index, int trial) {
  const double c_sigma = config.sigma_grid[grid_index];
  const std::uint64_t trial_seed = derive_seed(config.seed, grid_index, trial);
  TrialOutput out;
  try {
    const double sigma =
        c_sigma * std::sqrt(static_cast<double>(config.n) / config.d);
    const SyncProblem problem =
        make_problem(config.n, config.d, sigma, trial_seed);

    const SpectralSolution spec = spectral_estimate(problem);
    GpmOptions gpm;
    gpm.max_iters = config.gpm_max_iters;
    const MleSolution mle = gpm_estimate(problem, spec.z_eig, gpm);

    const double alpha = config.alphas.empty() ? 0.05 : config.alphas[0];

    if (config.run_mle) {
      std::vector<NewtonReportRow> newton;
      if (config.with_newton) {
        const BlockStack aligned = align_to(mle.z_hat, problem.truth);
        newton = mle_newton_report(problem, aligned);
      }
      append_estimator_rows(out, problem, mle.z_hat, "mle", mle.certified,
                            c_sigma, trial, trial_seed, alpha, config.c0,
                            config.with_newton ? &newton : nullptr);
    }
    if (config.run_spectral) {
      std::vector<NewtonReportRow> newton;
      if (config.with_newton) {
        const Alignment a = frobenius_block_distance(spec.s_eig, problem.truth);
        const BlockStack s_aligned = rotate(spec.s_eig, a.q.transpose());
        const BlockStack z_aligned = rotate(spec.z_eig, a.q.transpose());
        newton = spectral_newton_report(problem, s_aligned, z_aligned);
      }
      append_estimator_rows(out, problem, spec.z_eig, "spectral", true, c_sigma,
                            trial, trial_seed, alpha, config.c0,
                            config.with_newton ? &newton : nullptr);
    }
  } catch (const std::exception& e) {
    out.rows.clear();
    out.failure = TrialFailure{c_sigma, trial, e.what()};
  }
  return out;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config) {
  config.validate();
  const int num_grid = static_cast<int>(config.sigma_grid.size());
  const int units = num_grid * config.trials;
  std::vector<TrialOutput> outputs(units);

  if (config.workers > 0) {
#pragma omp parallel for schedule(dynamic) num_threads(config.workers)
    for (int u = 0; u < units; ++u)
      outputs[u] = run_trial(config, u / config.trials, u % config.trials);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (int u = 0; u < units; ++u)
      outputs[u] = run_trial(config, u / config.trials, u % config.trials);
  }

  ResultTable table;
  table.config = config;
  table.trials_attempted = units;
  for (int u = 0; u < units; ++u) {
    TrialOutput& out = outputs[u];
    if (out.failure) table.failures.push_back(*out.failure);
    for (auto& row : out.rows) table.rows.push_back(std::move(row));
  }
  return table;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw EmptySelectionError("quantile of empty data");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= values.size()) return values.back();
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

BoxplotSummary summarize_values(const std::vector<double>& values) {
  if (values.empty()) throw EmptySelectionError("summarize_values: empty data");
  BoxplotSummary s;
  s.count = static_cast<int>(values.size());
  s.median = quantile_type7(values, 0.5);
  s.q25 = quantile_type7(values, 0.25);
  s.q75 = quantile_type7(values, 0.75);
  const double iqr = s.q75 - s.q25;
  const double lo_fence = s.q25 - 1.5 * iqr;
  const double hi_fence = s.q75 + 1.5 * iqr;
  s.whisker_lo = std::numeric_limits<double>::infinity();
  s.whisker_hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (v >= lo_fence && v <= hi_fence) {
      s.whisker_lo = std::min(s.whisker_lo, v);
      s.whisker_hi = std::max(s.whisker_hi, v);
    } else {
      ++s.outliers;
    }
  }
  if (s.outliers == s.count) {  // all outside fences cannot happen; guard
    s.whisker_lo = s.median;
    s.whisker_hi = s.median;
  }
  return s;
}

namespace {

double row_statistic(const ResultRow& row, const std::string& statistic) {
  if (statistic == "sym_residual") return row.sym_residual;
  if (statistic == "coef_stat") return row.coef_stat;
  if (statistic == "fo_residual") return row.fo_residual;
  if (statistic == "ks_p") return row.ks_p;
  if (statistic == "ks_d") return row.ks_d;
  if (statistic == "newton_gap_v") return row.newton_gap_v;
  if (statistic == "newton_gap_closed") return row.newton_gap_closed;
  if (statistic == "newton_gap_z") return row.newton_gap_z;
  if (statistic == "dist_f") return row.dist_f;
  throw EmptySelectionError("unknown statistic: " + statistic);
}

}  // namespace

std::vector<BoxplotSummary> summarize(const ResultTable& table,
                                      const std::string& statistic,
                                      const std::string& estimator) {
  std::vector<BoxplotSummary> series;
  for (double c_sigma : table.config.sigma_grid) {
    std::vector<double> values;
    for (const ResultRow& row : table.rows) {
      if (row.estimator != estimator || row.c_sigma != c_sigma) continue;
      const double v = row_statistic(row, statistic);
      if (std::isfinite(v)) values.push_back(v);
    }
    if (values.empty()) continue;
    BoxplotSummary s = summarize_values(values);
    s.c_sigma = c_sigma;
    series.push_back(s);
  }
  if (series.empty())
    throw EmptySelectionError("summarize: no rows for statistic " + statistic +
                              ", estimator " + estimator);
  return series;
}

SlopeFit fit_loglog_slope(const std::vector<BoxplotSummary>& series) {
  if (series.size() < 3)
    throw DegenerateFitError("fit_loglog_slope: need at least 3 grid points");
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (!(s.median > 0.0) || !(s.c_sigma > 0.0))
      throw DegenerateFitError("fit_loglog_slope: non-positive median");
    xs.push_back(std::log(s.c_sigma));
    ys.push_back(std::log(s.median));
  }
  const double m = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) throw DegenerateFitError("fit_loglog_slope: singular fit");
  SlopeFit fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / m;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
  }
  fit.r2 = (ss_tot > 0.0) ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

std::vector<CoverageSummaryRow> coverage_table(const ResultTable& table) {
  const int n = table.config.n;
  const int d = table.config.d;
  const int df = d * (d - 1) / 2;
  const double dims_term =
      d * std::pow(std::sqrt(static_cast<double>(d)) +
                       std::sqrt(std::log(static_cast<double>(n))),
                   2.0) /
      std::sqrt(static_cast<double>(n));

  std::vector<CoverageSummaryRow> out;
  std::vector<std::string> estimators;
  if (table.config.run_mle) estimators.push_back("mle");
  if (table.config.run_spectral) estimators.push_back("spectral");

  for (double c_sigma : table.config.sigma_grid) {
    for (const std::string& estimator : estimators) {
      for (double alpha : table.config.alphas) {
        const double chi_block = std::sqrt(stats::chi2_quantile(df, 1.0 - alpha));
        const double chi_pair =
            std::sqrt(stats::chi2_quantile(df, 1.0 - alpha / 2.0));
        long long blocks = 0, blocks_covered = 0;
        long long pairs = 0, pairs_covered = 0;
        double radius_sum = 0.0;
        // Rows are in (grid, trial, estimator, block) order with contiguous
        // blocks, so neighbours at even offsets form the pair sample.
        std::vector<const ResultRow*> group;
        for (const ResultRow& row : table.rows) {
          if (row.c_sigma != c_sigma || row.estimator != estimator) continue;
          group.push_back(&row);
        }
        for (const ResultRow* row : group) {
          const double slack = table.config.c0 * row->sigma_hat * dims_term;
          const double radius = row->sigma_hat /
                                std::sqrt(static_cast<double>(n)) *
                                (chi_block + slack);
          ++blocks;
          radius_sum += radius;
          if (row->fo_residual <= radius + kCoverSlack) ++blocks_covered;
        }
        for (std::size_t k = 0; k + 1 < group.size(); k += 2) {
          const ResultRow* a = group[k];
          const ResultRow* b = group[k + 1];
          if (a->trial != b->trial || a->block + 1 != b->block) continue;
          const double slack = table.config.c0 * a->sigma_hat * dims_term;
          const double radius = a->sigma_hat /
                                std::sqrt(static_cast<double>(n)) *
                                (chi_pair + slack);
          ++pairs;
          if (a->fo_residual <= radius + kCoverSlack &&
              b->fo_residual <= radius + kCoverSlack)
            ++pairs_covered;
        }
        if (blocks == 0) continue;
        CoverageSummaryRow row;
        row.c_sigma = c_sigma;
        row.estimator = estimator;
        row.alpha = alpha;
        row.block_coverage =
            static_cast<double>(blocks_covered) / static_cast<double>(blocks);
        row.pair_coverage =
            pairs > 0 ? static_cast<double>(pairs_covered) / static_cast<double>(pairs)
                      : 1.0;
        row.mean_radius = radius_sum / static_cast<double>(blocks);
        out.push_back(std::move(row));
      }
    }
  }
  return out;
}

void write_coverage_csv(const std::vector<CoverageSummaryRow>& rows,
                        const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << seed << "\n";
  out << "c_sigma,estimator,alpha,block_coverage,pair_coverage,mean_radius\n";
  for (const auto& r : rows) {
    out << r.c_sigma << ',' << r.estimator << ',' << r.alpha << ','
        << r.block_coverage << ',' << r.pair_coverage << ',' << r.mean_radius
        << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

double theoretical_first_order_coef(int n, int d, double c_sigma) {
  const double sigma = c_sigma * std::sqrt(static_cast<double>(n) / d);
  return sigma * std::sqrt(static_cast<double>(n) - 1.0) /
         (std::sqrt(2.0) * n);
}

void write_coef_summary_csv(const std::vector<BoxplotSummary>& series, int n,
                            int d, const std::string& estimator,
                            const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << seed << "\n";
  out << "c_sigma,estimator,count,median,q25,q75,whisker_lo,whisker_hi,"
         "outliers,theoretical_coef\n";
  for (const auto& s : series) {
    out << s.c_sigma << ',' << estimator << ',' << s.count << ',' << s.median
        << ',' << s.q25 << ',' << s.q75 << ',' << s.whisker_lo << ','
        << s.whisker_hi << ',' << s.outliers << ','
        << theoretical_first_order_coef(n, d, s.c_sigma) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::string result_table_to_csv(const ResultTable& table) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << table.config.seed << " rng=" << Rng::kLabel << "\n";
  out << "c_sigma,trial,trial_seed,estimator,block,certified,dist_f,"
         "sym_residual,coef_stat,fo_residual,ks_d,ks_p,covered,radius,"
         "sigma_hat,newton_gap_v,newton_gap_closed,newton_gap_z,"
         "newton_error\n";
  for (const ResultRow& r : table.rows) {
    out << r.c_sigma << ',' << r.trial << ',' << r.trial_seed << ','
        << r.estimator << ',' << r.block << ',' << (r.certified ? 1 : 0) << ','
        << r.dist_f << ',' << r.sym_residual << ',' << r.coef_stat << ','
        << r.fo_residual << ',' << r.ks_d << ',' << r.ks_p << ',' << r.covered
        << ',' << r.radius << ',' << r.sigma_hat << ',' << r.newton_gap_v
        << ',' << r.newton_gap_closed << ',' << r.newton_gap_z << ','
        << r.newton_error << "\n";
  }
  for (const TrialFailure& f : table.failures) {
    out << "# failure c_sigma=" << f.c_sigma << " trial=" << f.trial << " "
        << f.message << "\n";
  }
  return out.str();
}

void write_result_table_csv(const ResultTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << result_table_to_csv(table);
  if (!out) throw IoError("write failed: " + path);
}

void write_summary_csv(const std::vector<BoxplotSummary>& series,
                       const std::string& statistic, const std::string& estimator,
                       const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << seed << "\n";
  out << "c_sigma,statistic,estimator,count,median,q25,q75,whisker_lo,"
         "whisker_hi,outliers\n";
  for (const auto& s : series) {
    out << s.c_sigma << ',' << statistic << ',' << estimator << ',' << s.count
        << ',' << s.median << ',' << s.q25 << ',' << s.q75 << ','
        << s.whisker_lo << ',' << s.whisker_hi << ',' << s.outliers << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_summary_json(const std::vector<BoxplotSummary>& series,
                        const std::string& statistic, const std::string& estimator,
                        const std::string& path, std::uint64_t seed) {
  json j;
  j["seed"] = seed;
  j["statistic"] = statistic;
  j["estimator"] = estimator;
  json points = json::array();
  for (const auto& s : series) {
    points.push_back({{"c_sigma", s.c_sigma},
                      {"count", s.count},
                      {"median", s.median},
                      {"q25", s.q25},
                      {"q75", s.q75},
                      {"whisker_lo", s.whisker_lo},
                      {"whisker_hi", s.whisker_hi},
                      {"outliers", s.outliers}});
  }
  j["points"] = points;
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

std::uint64_t fnv1a_hash(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace orthosync
