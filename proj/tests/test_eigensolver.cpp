#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "orthosync/eigensolver.hpp"
#include "orthosync/errors.hpp"
#include "orthosync/estimators.hpp"
#include "orthosync/kernels.hpp"
#include "orthosync/model.hpp"
#include "orthosync/rng.hpp"

using namespace orthosync;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Cyclic Jacobi rotations; the independent dense oracle for small matrices.
void jacobi_eig(MatrixXd a, VectorXd& values, MatrixXd& vectors) {
  const int n = static_cast<int>(a.rows());
  vectors = MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) < 1e-14 * a.norm()) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        Eigen::JacobiRotation<double> rot(c, s);
        a.applyOnTheLeft(p, q, rot.transpose());
        a.applyOnTheRight(p, q, rot);
        vectors.applyOnTheRight(p, q, rot);
      }
  }
  values = a.diagonal();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return values(i) > values(j); });
  VectorXd sorted_values(n);
  MatrixXd sorted_vectors(n, n);
  for (int k = 0; k < n; ++k) {
    sorted_values(k) = values(order[k]);
    sorted_vectors.col(k) = vectors.col(order[k]);
  }
  values = sorted_values;
  vectors = sorted_vectors;
}

ApplyFn dense_apply(const MatrixXd& a) {
  return [&a](const MatrixXd& x, MatrixXd& y) { y = a * x; };
}

}  // namespace

TEST_CASE("rank-d gram structure at zero noise") {
  const int n = 30, d = 3;
  const SyncProblem p = make_problem(n, d, 0.0, 4);
  const TopEigenvectors top = top_d_eigenvectors(p.observation, d);
  for (int k = 0; k < d; ++k)
    CHECK(top.values(k) == doctest::Approx(n).epsilon(1e-9));
  CHECK(std::abs(top.values(d)) <= 1e-8 * n);

  CHECK((top.vectors.transpose() * top.vectors - MatrixXd::Identity(d, d))
            .norm() <= 1e-10);
  // The top space is the column space of the truth stack.
  const MatrixXd proj_est = top.vectors * top.vectors.transpose();
  const MatrixXd zn = p.truth.data / std::sqrt(static_cast<double>(n));
  const MatrixXd proj_truth = zn * zn.transpose();
  CHECK((proj_est - proj_truth).norm() <= 1e-8);
}

TEST_CASE("matches the dense Jacobi oracle on small problems") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const int n = 3, d = 2;
    const SyncProblem p = make_problem(n, d, 0.3, seed);
    const MatrixXd c = p.observation.data;

    VectorXd oracle_values;
    MatrixXd oracle_vectors;
    jacobi_eig(c, oracle_values, oracle_vectors);

    const TopEigenvectors top = top_d_eigenvectors(p.observation, d);
    for (int k = 0; k < d + 1; ++k)
      CHECK(std::abs(top.values(k) - oracle_values(k)) <=
            1e-8 * std::max(1.0, std::abs(oracle_values(k))));

    // Sign/rotation freedom: compare the spanned subspace, not the columns.
    const double gap = oracle_values(d - 1) - oracle_values(d);
    if (gap > 1e-3) {
      const MatrixXd proj_est = top.vectors * top.vectors.transpose();
      const MatrixXd oracle_top = oracle_vectors.leftCols(d);
      const MatrixXd proj_oracle = oracle_top * oracle_top.transpose();
      CHECK((proj_est - proj_oracle).norm() <= 1e-8);
    }
  }
}

TEST_CASE("per-pair residuals meet the tolerance") {
  const int n = 20, d = 3;
  const SyncProblem p = make_problem(n, d, 0.25, 8);
  const TopEigenvectors top = top_d_eigenvectors(p.observation, d);
  const double scale = std::abs(top.values(0));
  for (int k = 0; k < d; ++k) {
    const VectorXd v = top.vectors.col(k);
    const VectorXd cv = p.observation.data * v;
    CHECK((cv - top.values(k) * v).norm() <= 1e-8 * scale);
  }
}

TEST_CASE("smallest eigenpairs through the negated operator") {
  Rng rng(15);
  MatrixXd g = rng.gaussian_matrix(40, 40);
  MatrixXd a = 0.5 * (g + g.transpose());

  VectorXd oracle_values;
  MatrixXd oracle_vectors;
  jacobi_eig(a, oracle_values, oracle_vectors);

  const EigenPairs low = smallest_eigenpairs(dense_apply(a), 40, 3, 3);
  for (int k = 0; k < 3; ++k)
    CHECK(low.values(k) ==
          doctest::Approx(oracle_values(39 - k)).epsilon(1e-8));
  CHECK(low.values(0) <= low.values(1));
  CHECK(low.values(1) <= low.values(2));
}

TEST_CASE("iteration cap raises NoConvergence") {
  Rng rng(16);
  MatrixXd g = rng.gaussian_matrix(30, 30);
  MatrixXd a = 0.5 * (g + g.transpose());
  SubspaceOptions opts;
  opts.max_iterations = 1;
  CHECK_THROWS_AS(largest_eigenpairs(dense_apply(a), 30, 2, 2, opts),
                  NoConvergenceError);
}
