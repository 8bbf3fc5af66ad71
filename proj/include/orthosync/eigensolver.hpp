#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

namespace orthosync {

// y = A x for a symmetric operator A; x may have several columns.
using ApplyFn =
    std::function<void(const Eigen::MatrixXd& x, Eigen::MatrixXd& y)>;

struct SubspaceOptions {
  // Residual tolerance (relative to the spectral scale) for the strict
  // leading pairs; the remaining requested values only need their Ritz
  // values to stabilize.
  double residual_tol = 1e-10;
  double value_tol = 1e-11;
  int max_iterations = 5000;
  int padding = 3;
  int power_iterations = 60;
  std::uint64_t seed = 0x5be0cd19137e2179ULL;
};

struct EigenPairs {
  Eigen::MatrixXd vectors;  // dim x count
  Eigen::VectorXd values;   // count entries
  int iterations = 0;
};

// Estimate of the spectral radius from plain power iterations.
double spectral_radius_estimate(const ApplyFn& apply, int dim, int iterations,
                                std::uint64_t seed);

// Top `count` eigenvalues (descending) of a symmetric operator by subspace
// iteration with Rayleigh-Ritz on the shifted operator A + cI, where the
// shift c makes the spectrum nonnegative so the algebraically largest
// eigenvalues dominate. The first `strict_count` eigenpairs satisfy the
// residual tolerance. Throws NoConvergenceError after the iteration cap.
EigenPairs largest_eigenpairs(const ApplyFn& apply, int dim, int count,
                              int strict_count,
                              const SubspaceOptions& options = {});

// Smallest `count` eigenvalues (ascending), via the negated operator.
EigenPairs smallest_eigenpairs(const ApplyFn& apply, int dim, int count,
                               int strict_count,
                               const SubspaceOptions& options = {});

}  // namespace orthosync
