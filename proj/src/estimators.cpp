#include "orthosync/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "orthosync/errors.hpp"
#include "orthosync/kernels.hpp"
#include "orthosync/manifold.hpp"

namespace orthosync {

TopEigenvectors top_d_eigenvectors(const Observation& c, int d,
                                   const SubspaceOptions& options) {
  const int dim = static_cast<int>(c.dim());
  ApplyFn apply = [&c](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    kernels::multiply_into(c, x, y);
  };
  EigenPairs pairs = largest_eigenpairs(apply, dim, d + 1, d, options);
  TopEigenvectors out;
  out.vectors = pairs.vectors.leftCols(d);
  out.values = pairs.values;
  out.iterations = pairs.iterations;
  return out;
}

SpectralSolution spectral_estimate(const SyncProblem& problem,
                                   const SubspaceOptions& options) {
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  const TopEigenvectors top = top_d_eigenvectors(problem.observation, d, options);

  SpectralSolution out;
  out.s_eig = BlockStack(n, d);
  out.s_eig.data = std::sqrt(static_cast<double>(n)) * top.vectors;
  out.z_eig = kernels::polar_round(out.s_eig);
  out.eigenvalues = top.values;
  out.iterations = top.iterations;

  out.kappa = 1.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd pi = out.s_eig.block(i).transpose() * out.s_eig.block(i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pi);
    const double lo = eig.eigenvalues()(0);
    const double hi = eig.eigenvalues()(d - 1);
    if (lo <= 0.0)
      throw RankDeficientError("spectral_estimate: singular Pi block " +
                               std::to_string(i));
    out.kappa = std::max(out.kappa, hi / lo);
  }
  return out;
}

std::pair<double, double> kkt_certificate(const Observation& c,
                                          const BlockStack& z) {
  const int n = z.n;
  const int d = z.d;
  const Eigen::MatrixXd a = kernels::multiply(c, z.data);

  std::vector<Eigen::MatrixXd> lambda(n);
  double residual_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd ai = a.middleRows(static_cast<Eigen::Index>(i) * d, d);
    const Eigen::MatrixXd zi = z.block(i);
    lambda[i] = 0.5 * (ai * zi.transpose() + zi * ai.transpose());
    residual_sq += (lambda[i] * zi - ai).squaredNorm();
  }

  ApplyFn apply_m = [&](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    kernels::multiply_into(c, x, y);
    y = -y;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i)
      y.middleRows(static_cast<Eigen::Index>(i) * d, d).noalias() +=
          lambda[i] * x.middleRows(static_cast<Eigen::Index>(i) * d, d);
  };
  const EigenPairs low =
      smallest_eigenpairs(apply_m, static_cast<int>(c.dim()), d + 1, d);
  return {std::sqrt(residual_sq), low.values(d)};
}

MleSolution gpm_estimate(const SyncProblem& problem, const BlockStack& init,
                         const GpmOptions& options) {
  if (!all_blocks_orthogonal(init, 1e-8))
    throw InvalidDimsError("gpm_estimate: init blocks must be orthogonal");
  const Observation& c = problem.observation;

  MleSolution out;
  out.z_hat = init;
  out.objective_trace.reserve(options.max_iters + 1);

  Eigen::MatrixXd y = kernels::multiply(c, out.z_hat.data);
  out.objective_trace.push_back((y.array() * out.z_hat.data.array()).sum());

  for (int t = 0; t < options.max_iters; ++t) {
    const BlockStack next = kernels::polar_round(y, out.z_hat.n, out.z_hat.d);
    const double step = (next.data - out.z_hat.data).norm();
    out.z_hat = next;
    out.iterations = t + 1;
    y = kernels::multiply(c, out.z_hat.data);
    out.objective_trace.push_back((y.array() * out.z_hat.data.array()).sum());
    if (step <= options.stationary_tol) break;
  }

  const auto [residual, gap] = kkt_certificate(c, out.z_hat);
  out.kkt_residual = residual;
  out.kkt_gap = gap;
  out.certified =
      residual <= options.kkt_residual_tol && gap >= options.kkt_gap_tol;
  out.strict_certified = residual <= options.kkt_residual_tol && gap >= 1e-8;
  return out;
}

}  // namespace orthosync
