#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "orthosync/eigensolver.hpp"
#include "orthosync/model.hpp"

namespace orthosync {

struct TopEigenvectors {
  Eigen::MatrixXd vectors;   // (n*d) x d, orthonormal columns
  Eigen::VectorXd values;    // d+1 values, descending
  int iterations = 0;
};

// Top d eigenvectors of the observation matrix plus lambda_{d+1} for gap
// diagnostics.
TopEigenvectors top_d_eigenvectors(const Observation& c, int d,
                                   const SubspaceOptions& options = {});

struct SpectralSolution {
  BlockStack s_eig;           // sqrt(n) * eigenvectors, S^T S = n I_d
  BlockStack z_eig;           // block-wise polar rounding of s_eig
  Eigen::VectorXd eigenvalues;  // top d+1 eigenvalues of C
  double kappa = 1.0;         // max_i cond(S_i^T S_i)
  int iterations = 0;
};

SpectralSolution spectral_estimate(const SyncProblem& problem,
                                   const SubspaceOptions& options = {});

struct GpmOptions {
  int max_iters = 100;
  double stationary_tol = 1e-12;
  double kkt_residual_tol = 1e-8;
  // The relaxed gap threshold; the strict paper threshold (+1e-8) is also
  // recorded on the solution.
  double kkt_gap_tol = -1e-8;
};

struct MleSolution {
  BlockStack z_hat;
  int iterations = 0;
  double kkt_residual = 0.0;
  double kkt_gap = 0.0;       // lambda_{d+1}(Lambda - C)
  bool certified = false;     // residual <= 1e-8 and gap >= -1e-8
  bool strict_certified = false;  // residual <= 1e-8 and gap >= +1e-8
  std::vector<double> objective_trace;  // <C, Z^t Z^t^T> per iterate
};

// Generalized power method Z^{t+1} = P_n(C Z^t) with approximate-KKT
// certification. Uncertified runs are returned with certified = false.
MleSolution gpm_estimate(const SyncProblem& problem, const BlockStack& init,
                         const GpmOptions& options = {});

// (residual, gap) of the block-diagonal dual certificate at Z:
// Lambda_ii = (A_i Z_i^T + Z_i A_i^T)/2 with A_i = sum_j C_ij Z_j,
// residual = ||(Lambda - C) Z||_F, gap = lambda_{d+1}(Lambda - C).
std::pair<double, double> kkt_certificate(const Observation& c,
                                          const BlockStack& z);

}  // namespace orthosync
