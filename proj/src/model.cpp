#include "orthosync/model.hpp"

#include <cmath>
#include <sstream>

#include "orthosync/errors.hpp"
#include "orthosync/manifold.hpp"

namespace orthosync {

bool all_blocks_orthogonal(const BlockStack& s, double tol) {
  for (int i = 0; i < s.n; ++i)
    if (!manifold::is_orthogonal(s.block(i), tol)) return false;
  return true;
}

BlockStack sample_ground_truth(int n, int d, std::uint64_t seed) {
  if (n < 2 || d < 2) {
    std::ostringstream msg;
    msg << "sample_ground_truth: need n >= 2 and d >= 2, got n=" << n
        << " d=" << d;
    throw InvalidDimsError(msg.str());
  }
  Rng rng(seed);
  BlockStack z(n, d);
  for (int i = 0; i < n; ++i) z.block(i) = haar_orthogonal(d, rng);
  return z;
}

SyncProblem generate_problem(const BlockStack& truth, double sigma,
                             std::uint64_t seed) {
  if (sigma < 0.0)
    throw InvalidSigmaError("generate_problem: sigma must be >= 0");
  const int n = truth.n;
  const int d = truth.d;
  SyncProblem problem;
  problem.truth = truth;
  problem.sigma = sigma;
  problem.seed = seed;
  problem.observation = Observation(n, d);
  Observation& c = problem.observation;

  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    c.block(i, i) = Eigen::MatrixXd::Identity(d, d);
    for (int j = i + 1; j < n; ++j) {
      const Eigen::MatrixXd w = rng.gaussian_matrix(d, d);
      c.block(i, j) = truth.block(i) * truth.block(j).transpose() + sigma * w;
      c.block(j, i) = c.block(i, j).transpose();
    }
  }
  return problem;
}

SyncProblem make_problem(int n, int d, double sigma, std::uint64_t seed) {
  const BlockStack truth = sample_ground_truth(n, d, derive_seed(seed, 0, 0));
  SyncProblem problem = generate_problem(truth, sigma, derive_seed(seed, 1, 0));
  problem.seed = seed;
  return problem;
}

double snr(int n, int d, double sigma) {
  if (sigma <= 0.0)
    throw InvalidSigmaError("snr: sigma must be > 0");
  return std::sqrt(static_cast<double>(n) / d) / sigma;
}

Alignment frobenius_block_distance(const BlockStack& s, const BlockStack& z) {
  if (s.n != z.n || s.d != z.d)
    throw InvalidDimsError("frobenius_block_distance: shape mismatch");
  Alignment out;
  out.q = manifold::polar(z.data.transpose() * s.data);
  out.distance = (s.data - z.data * out.q).norm();
  return out;
}

BlockStack rotate(const BlockStack& s, const Eigen::MatrixXd& o) {
  BlockStack out = s;
  out.data = s.data * o;
  return out;
}

BlockStack align_to(const BlockStack& s, const BlockStack& z) {
  const Alignment a = frobenius_block_distance(s, z);
  return rotate(s, a.q.transpose());
}

}  // namespace orthosync
