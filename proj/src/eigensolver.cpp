#include "orthosync/eigensolver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "orthosync/errors.hpp"
#include "orthosync/rng.hpp"

namespace orthosync {

namespace {

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
}

}  // namespace

double spectral_radius_estimate(const ApplyFn& apply, int dim, int iterations,
                                std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd v = rng.gaussian_matrix(dim, 1);
  const double nv = v.norm();
  if (nv == 0.0) return 0.0;
  v /= nv;
  Eigen::MatrixXd w(dim, 1);
  double rho = 0.0;
  for (int t = 0; t < iterations; ++t) {
    apply(v, w);
    const double nw = w.norm();
    rho = std::max(rho, nw);
    if (nw == 0.0) break;
    v = w / nw;
  }
  return rho;
}

EigenPairs largest_eigenpairs(const ApplyFn& apply, int dim, int count,
                              int strict_count,
                              const SubspaceOptions& options) {
  if (count < 1 || count > dim || strict_count > count)
    throw InvalidDimsError("largest_eigenpairs: bad count");
  const int m = std::min(dim, count + options.padding);

  const double rho = spectral_radius_estimate(
      apply, dim, options.power_iterations, options.seed);
  // 25% headroom against underestimation of |lambda_min|.
  const double shift = (rho > 0.0) ? 1.25 * rho : 1.0;

  Rng rng(options.seed + 1);
  Eigen::MatrixXd x = orthonormal_columns(rng.gaussian_matrix(dim, m));
  Eigen::MatrixXd ax(dim, m);
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(
      m, std::numeric_limits<double>::quiet_NaN());

  double worst_residual = std::numeric_limits<double>::quiet_NaN();
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    apply(x, ax);
    ax += shift * x;

    // Rayleigh-Ritz on the shifted operator.
    Eigen::MatrixXd b = x.transpose() * ax;
    b = 0.5 * (b + b.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    // Eigen returns ascending order; flip to descending.
    Eigen::MatrixXd rot(m, m);
    Eigen::VectorXd theta(m);
    for (int j = 0; j < m; ++j) {
      rot.col(j) = eig.eigenvectors().col(m - 1 - j);
      theta(j) = eig.eigenvalues()(m - 1 - j);
    }
    const Eigen::MatrixXd ritz = x * rot;
    const Eigen::MatrixXd a_ritz = ax * rot;
    const double scale =
        std::max({std::abs(theta(0)), std::abs(theta(m - 1)), 1e-300});

    bool converged = iter >= 2;
    worst_residual = 0.0;
    for (int j = 0; j < strict_count && converged; ++j) {
      const double res = (a_ritz.col(j) - theta(j) * ritz.col(j)).norm();
      worst_residual = std::max(worst_residual, res);
      if (res > options.residual_tol * scale) converged = false;
    }
    for (int j = strict_count; j < count && converged; ++j) {
      if (!(std::abs(theta(j) - prev(j)) <= options.value_tol * scale))
        converged = false;
    }
    if (converged) {
      EigenPairs out;
      out.vectors = ritz.leftCols(count);
      out.values = theta.head(count).array() - shift;
      out.iterations = iter;
      return out;
    }
    prev = theta;
    x = orthonormal_columns(ax);
  }

  std::ostringstream msg;
  msg << "subspace iteration did not converge in " << options.max_iterations
      << " sweeps (worst residual " << worst_residual << ")";
  throw NoConvergenceError(msg.str());
}

EigenPairs smallest_eigenpairs(const ApplyFn& apply, int dim, int count,
                               int strict_count,
                               const SubspaceOptions& options) {
  ApplyFn negated = [&apply](const Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    apply(x, y);
    y = -y;
  };
  EigenPairs out = largest_eigenpairs(negated, dim, count, strict_count, options);
  out.values = -out.values;  // ascending order of the original operator
  return out;
}

}  // namespace orthosync
