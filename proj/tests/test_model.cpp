#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "orthosync/errors.hpp"
#include "orthosync/io.hpp"
#include "orthosync/manifold.hpp"
#include "orthosync/model.hpp"
#include "orthosync/rng.hpp"

using namespace orthosync;
using Eigen::MatrixXd;

namespace {

std::string temp_path(const char* name) {
  return std::string("/tmp/orthosync_test_") + name;
}

}  // namespace

TEST_CASE("ground truth sampling is deterministic and orthogonal") {
  const BlockStack a = sample_ground_truth(2, 2, 7);
  const BlockStack b = sample_ground_truth(2, 2, 7);
  CHECK(a.data == b.data);

  const BlockStack z = sample_ground_truth(20, 4, 99);
  for (int i = 0; i < z.n; ++i) {
    CHECK((z.block(i).transpose() * z.block(i) - MatrixXd::Identity(4, 4))
              .norm() <= 1e-12);
  }
  CHECK_THROWS_AS(sample_ground_truth(1, 2, 0), InvalidDimsError);
  CHECK_THROWS_AS(sample_ground_truth(4, 1, 0), InvalidDimsError);
}

TEST_CASE("haar blocks have zero mean trace at d=2") {
  Rng rng(1234);
  double sum = 0.0;
  const int samples = 10000;
  for (int k = 0; k < samples; ++k) sum += haar_orthogonal(2, rng).trace();
  CHECK(std::abs(sum / samples) <= 0.05);
}

TEST_CASE("noiseless observations reproduce the block products exactly") {
  const BlockStack z = sample_ground_truth(8, 3, 5);
  const SyncProblem p = generate_problem(z, 0.0, 17);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      const MatrixXd expected =
          (i == j) ? MatrixXd(MatrixXd::Identity(3, 3))
                   : MatrixXd(z.block(i) * z.block(j).transpose());
      if (i <= j) {
        CHECK(MatrixXd(p.observation.block(i, j)) == expected);
      } else {
        CHECK((MatrixXd(p.observation.block(i, j)) - expected).norm() <= 1e-15);
      }
    }
  CHECK((p.observation.data - p.observation.data.transpose()).norm() == 0.0);
  CHECK_THROWS_AS(generate_problem(z, -0.1, 0), InvalidSigmaError);
}

TEST_CASE("regenerating a problem from its seed is bit exact") {
  const BlockStack z = sample_ground_truth(12, 3, 21);
  const SyncProblem a = generate_problem(z, 0.7, 34);
  const SyncProblem b = generate_problem(z, 0.7, a.seed);
  CHECK(a.observation.data == b.observation.data);
}

TEST_CASE("noise has unit variance after rescaling") {
  const int n = 100, d = 3;
  const BlockStack z = sample_ground_truth(n, d, 3);
  const double sigma = 0.8;
  const SyncProblem p = generate_problem(z, sigma, 11);
  double sum = 0.0, sum_sq = 0.0;
  long long count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const MatrixXd w =
          (p.observation.block(i, j) - z.block(i) * z.block(j).transpose()) /
          sigma;
      sum += w.sum();
      sum_sq += w.squaredNorm();
      count += d * d;
    }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  CHECK(std::abs(var - 1.0) <= 0.05);
}

TEST_CASE("snr arithmetic") {
  CHECK(snr(800, 5, 0.05 * std::sqrt(800.0 / 5.0)) ==
        doctest::Approx(20.0).epsilon(1e-12));
  CHECK(snr(4, 4, 1.0) == doctest::Approx(1.0));
  CHECK(snr(100, 4, 0.5) == doctest::Approx(10.0));
  CHECK_THROWS_AS(snr(10, 2, 0.0), InvalidSigmaError);
}

TEST_CASE("block distance resolves the global rotation") {
  const BlockStack z = sample_ground_truth(10, 3, 42);
  const Alignment self = frobenius_block_distance(z, z);
  CHECK(self.distance <= 1e-12);
  CHECK((self.q - MatrixXd::Identity(3, 3)).norm() <= 1e-12);

  Rng rng(7);
  const MatrixXd o = haar_orthogonal(3, rng);
  const Alignment rotated = frobenius_block_distance(rotate(z, o), z);
  CHECK(rotated.distance <= 1e-12);
  CHECK((rotated.q - o).norm() <= 1e-12);

  const BlockStack aligned = align_to(rotate(z, o), z);
  CHECK((aligned.data - z.data).norm() <= 1e-12);
}

TEST_CASE("nuclear norm identity for orthogonal-blocked stacks") {
  // For S with orthogonal blocks, d_F(S, Z)^2 = 2nd - 2 ||Z^T S||_*.
  const int n = 12, d = 3;
  const BlockStack z = sample_ground_truth(n, d, 101);
  const BlockStack s = sample_ground_truth(n, d, 505);
  const Alignment a = frobenius_block_distance(s, z);
  const MatrixXd m = z.data.transpose() * s.data;
  const double nuclear = Eigen::JacobiSVD<MatrixXd>(m).singularValues().sum();
  CHECK(a.distance * a.distance ==
        doctest::Approx(2.0 * n * d - 2.0 * nuclear).epsilon(1e-10));
}

TEST_CASE("problem files round trip bit exactly") {
  const SyncProblem p = make_problem(9, 3, 0.4, 777);
  const std::string path = temp_path("problem.bin");
  io::save_problem(p, path);
  const SyncProblem q = io::load_problem(path);
  CHECK(q.truth.n == p.truth.n);
  CHECK(q.truth.d == p.truth.d);
  CHECK(q.sigma == p.sigma);
  CHECK(q.seed == p.seed);
  CHECK(q.truth.data == p.truth.data);
  CHECK(q.observation.data == p.observation.data);
  std::remove(path.c_str());

  CHECK_THROWS_AS(io::load_problem("/tmp/orthosync_does_not_exist.bin"),
                  IoError);
}

TEST_CASE("block stack files round trip bit exactly") {
  const BlockStack z = sample_ground_truth(6, 4, 31);
  const std::string path = temp_path("stack.bin");
  io::save_blockstack(z, path);
  const BlockStack w = io::load_blockstack(path);
  CHECK(w.data == z.data);
  std::remove(path.c_str());
}

TEST_CASE("text export writes parseable headers") {
  const SyncProblem p = make_problem(3, 2, 0.2, 55);
  const std::string path = temp_path("problem.txt");
  io::save_problem_text(p, path);
  std::ifstream in(path);
  std::string word;
  int n = 0;
  in >> word >> n;
  CHECK(word == "n");
  CHECK(n == 3);
  std::remove(path.c_str());
}
