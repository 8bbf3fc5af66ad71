#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "orthosync/errors.hpp"
#include "orthosync/estimators.hpp"
#include "orthosync/manifold.hpp"
#include "orthosync/model.hpp"
#include "orthosync/newton.hpp"
#include "orthosync/rng.hpp"

using namespace orthosync;
using Eigen::MatrixXd;

TEST_CASE("noiseless newton step vanishes with hessian n I") {
  const int n = 15, d = 3;
  const SyncProblem p = make_problem(n, d, 0.0, 12);
  for (int i : {0, 7, 14}) {
    const NewtonEntry e = mle_newton_step(p, p.truth, i);
    CHECK((e.hessian - n * MatrixXd::Identity(d, d)).norm() <= 1e-10 * n);
    CHECK(e.v_tilde.norm() <= 1e-10);
    CHECK(e.v_hat.norm() <= 1e-10);
    CHECK((e.z_tilde - p.truth.block(i)).norm() <= 1e-10);
  }
}

TEST_CASE("newton step is tangent and 1-Lipschitz on noisy data") {
  const int n = 60, d = 3;
  const double sigma = 0.1 * std::sqrt(static_cast<double>(n) / d);
  const SyncProblem p = make_problem(n, d, sigma, 33);
  const SpectralSolution spec = spectral_estimate(p);
  const MleSolution mle = gpm_estimate(p, spec.z_eig);
  const BlockStack aligned = align_to(mle.z_hat, p.truth);

  const auto rows = mle_newton_report(p, aligned);
  REQUIRE(rows.size() == static_cast<std::size_t>(n));
  for (const auto& row : rows) {
    REQUIRE(row.ok);
    const NewtonEntry& e = row.entry;
    CHECK(manifold::is_tangent_at(p.truth.block(row.block), e.v_tilde, 1e-9));
    CHECK((e.hessian - e.hessian.transpose()).norm() <=
          1e-12 * e.hessian.norm());
    CHECK(manifold::is_orthogonal(e.z_tilde, 1e-10));
    CHECK(e.gap_z <= e.gap_v + 1e-12);
    CHECK(e.lambda_min_h > 0.0);
  }
}

TEST_CASE("noiseless spectral newton step vanishes") {
  const int n = 15, d = 3;
  const SyncProblem p = make_problem(n, d, 0.0, 44);
  const SpectralSolution spec = spectral_estimate(p);
  const Alignment a = frobenius_block_distance(spec.s_eig, p.truth);
  const BlockStack s_aligned = rotate(spec.s_eig, a.q.transpose());
  const BlockStack z_aligned = rotate(spec.z_eig, a.q.transpose());
  for (int i : {0, 5, 14}) {
    const MatrixXd pi = s_aligned.block(i).transpose() * s_aligned.block(i);
    CHECK((pi - MatrixXd::Identity(d, d)).norm() <= 1e-7);
    const NewtonEntry e = spectral_newton_step(p, s_aligned, z_aligned, i);
    CHECK(e.v_tilde.norm() <= 1e-7);
    CHECK((e.hessian - n * MatrixXd::Identity(d, d)).norm() <= 1e-7 * n);
  }
}

TEST_CASE("local spectral reformulation agrees with the rounded block") {
  // P(sum_j C_ij S_j Pi^{1/2}) recovers P(S_i) block by block.
  const int n = 50, d = 3;
  const double sigma = 0.1 * std::sqrt(static_cast<double>(n) / d);
  const SyncProblem p = make_problem(n, d, sigma, 55);
  const SpectralSolution spec = spectral_estimate(p);
  const Alignment a = frobenius_block_distance(spec.s_eig, p.truth);
  const BlockStack s = rotate(spec.s_eig, a.q.transpose());
  const BlockStack z = rotate(spec.z_eig, a.q.transpose());

  for (int i : {0, 20, 49}) {
    const MatrixXd row_sum =
        p.observation.data.middleRows(static_cast<Eigen::Index>(i) * d, d) *
        s.data;
    const MatrixXd pi = s.block(i).transpose() * s.block(i);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(pi);
    const MatrixXd pi_half = eig.eigenvectors() *
                             eig.eigenvalues().cwiseSqrt().asDiagonal() *
                             eig.eigenvectors().transpose();
    const MatrixXd minimizer = manifold::polar(row_sum * pi_half);
    CHECK((minimizer - z.block(i)).norm() <= 1e-8);
  }
}

TEST_CASE("quadratic model value and stationarity of the newton step") {
  Rng rng(66);
  const int d = 3;
  const MatrixXd phi0 = haar_orthogonal(d, rng);

  // A with positive definite H: dominant -phi0 component.
  const MatrixXd a = -8.0 * phi0 + rng.gaussian_matrix(d, d);
  CHECK(quadratic_model_value(a, phi0, MatrixXd::Zero(d, d)) ==
        doctest::Approx((a.array() * phi0.array()).sum()));

  const MatrixXd h = -0.5 * (a * phi0.transpose() + phi0 * a.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(h);
  REQUIRE(eig.eigenvalues()(0) > 0.0);
  // Tangent-space minimizer: V = Omega phi0 with H Omega + Omega H = 2 K,
  // K = -skew(A phi0^T).
  const MatrixXd x = -a * phi0.transpose();
  const MatrixXd kk = 0.5 * (x - x.transpose());
  const MatrixXd k_rot = eig.eigenvectors().transpose() * kk * eig.eigenvectors();
  MatrixXd omega_rot(d, d);
  for (int p = 0; p < d; ++p)
    for (int q = 0; q < d; ++q)
      omega_rot(p, q) =
          2.0 * k_rot(p, q) / (eig.eigenvalues()(p) + eig.eigenvalues()(q));
  const MatrixXd v_tilde =
      eig.eigenvectors() * omega_rot * eig.eigenvectors().transpose() * phi0;
  CHECK(manifold::is_tangent_at(phi0, v_tilde, 1e-9));

  const double at_min = quadratic_model_value(a, phi0, v_tilde);
  for (int k = 0; k < 20; ++k) {
    const MatrixXd u =
        manifold::tangent_project(phi0, rng.gaussian_matrix(d, d));
    const double t = (rng.uniform() * 2.0 - 1.0) * 1e-3;
    CHECK(quadratic_model_value(a, phi0, v_tilde + t * u) >= at_min - 1e-9);
  }
}

TEST_CASE("cubic expansion of the retraction objective") {
  Rng rng(77);
  const int d = 3;
  for (int rep = 0; rep < 30; ++rep) {
    const MatrixXd phi0 = haar_orthogonal(d, rng);
    const MatrixXd a = rng.gaussian_matrix(d, d);
    MatrixXd v = manifold::tangent_project(phi0, rng.gaussian_matrix(d, d));
    v *= (0.25 * rng.uniform()) / v.norm();

    const double g1 = (a.array() * manifold::retract(phi0, v).array()).sum();
    const double gbar1 = quadratic_model_value(a, phi0, v);
    const double cubic =
        0.5 * (a.array() * (v * v.transpose() * v).array()).sum();
    CHECK(std::abs(g1 - gbar1 + cubic) <=
          manifold::operator_norm(a) * std::pow(v.norm(), 4) + 1e-14);
  }
}

TEST_CASE("indefinite hessian is rejected") {
  const SyncProblem p = make_problem(10, 3, 0.0, 88);
  BlockStack flipped = p.truth;
  flipped.data = -flipped.data;
  CHECK_THROWS_AS(mle_newton_step(p, flipped, 0), HessianNotPdError);
}

TEST_CASE("newton csv export writes one line per block") {
  const SyncProblem p = make_problem(8, 2, 0.0, 5);
  const auto rows = mle_newton_report(p, p.truth);
  const std::string path = "/tmp/orthosync_newton.csv";
  write_newton_csv(rows, path, 5);
  std::ifstream in(path);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2 + 8);  // seed comment + header + blocks
  std::remove(path.c_str());
}
