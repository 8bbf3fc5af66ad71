#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "orthosync/rng.hpp"

namespace orthosync {

// n stacked d x d blocks, stored as an (n*d) x d matrix.
struct BlockStack {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd data;

  BlockStack() = default;
  BlockStack(int n_, int d_)
      : n(n_), d(d_), data(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_) * d_, d_)) {}

  auto block(int i) { return data.middleRows(static_cast<Eigen::Index>(i) * d, d); }
  auto block(int i) const { return data.middleRows(static_cast<Eigen::Index>(i) * d, d); }
};

// Symmetric (n*d) x (n*d) block observation matrix, identity diagonal blocks.
struct Observation {
  int n = 0;
  int d = 0;
  Eigen::MatrixXd data;

  Observation() = default;
  Observation(int n_, int d_)
      : n(n_), d(d_),
        data(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_) * d_,
                                   static_cast<Eigen::Index>(n_) * d_)) {}

  auto block(int i, int j) {
    return data.block(static_cast<Eigen::Index>(i) * d,
                      static_cast<Eigen::Index>(j) * d, d, d);
  }
  auto block(int i, int j) const {
    return data.block(static_cast<Eigen::Index>(i) * d,
                      static_cast<Eigen::Index>(j) * d, d, d);
  }
  Eigen::Index dim() const { return data.rows(); }
};

struct SyncProblem {
  BlockStack truth;
  double sigma = 0.0;
  Observation observation;
  std::uint64_t seed = 0;  // noise seed; regenerating from (truth, sigma, seed)
                           // reproduces the observation bit-exactly
};

bool all_blocks_orthogonal(const BlockStack& s, double tol = 1e-10);

// Independent Haar blocks, deterministic in seed.
BlockStack sample_ground_truth(int n, int d, std::uint64_t seed);

// C_ij = Z_i Z_j^T + sigma W_ij with W_ij i.i.d. standard normal for i < j,
// W_ji = W_ij^T, W_ii = 0. Noise blocks are drawn in row-major (i, j) order.
SyncProblem generate_problem(const BlockStack& truth, double sigma,
                             std::uint64_t seed);

// Convenience wrapper: truth seed = derive_seed(seed, 0, 0), noise seed =
// derive_seed(seed, 1, 0).
SyncProblem make_problem(int n, int d, double sigma, std::uint64_t seed);

// sigma^{-1} sqrt(n/d). Throws InvalidSigmaError for sigma <= 0.
double snr(int n, int d, double sigma);

struct Alignment {
  double distance = 0.0;   // min_O ||S - Z O||_F
  Eigen::MatrixXd q;       // the minimizing O, polar of Z^T S
};

// d_F(S, Z) together with the optimal rotation Q = polar(Z^T S).
Alignment frobenius_block_distance(const BlockStack& s, const BlockStack& z);

// S * O applied to every block.
BlockStack rotate(const BlockStack& s, const Eigen::MatrixXd& o);

// S rotated so polar(Z^T S) = I.
BlockStack align_to(const BlockStack& s, const BlockStack& z);

}  // namespace orthosync
