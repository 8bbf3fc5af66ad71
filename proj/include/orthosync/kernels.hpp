#pragma once

#include <Eigen/Core>

#include "orthosync/model.hpp"

namespace orthosync::kernels {

// Hot block-matrix kernels, OpenMP-parallel over block rows. Each output
// block is accumulated by a single thread in a fixed order, so results do
// not depend on the thread count. The serial textbook versions live in
// kernels::reference and are kept as the test oracle; bench_kernels compares
// the two.

// Y = C * X for X with n*d rows and any column count.
void multiply_into(const Observation& c, const Eigen::MatrixXd& x,
                   Eigen::MatrixXd& y);
Eigen::MatrixXd multiply(const Observation& c, const Eigen::MatrixXd& x);

// Block-wise polar rounding of an (n*d) x d stack onto O(d)^n.
BlockStack polar_round(const Eigen::MatrixXd& s, int n, int d);
BlockStack polar_round(const BlockStack& s);

// <C, S S^T>.
double objective(const Observation& c, const BlockStack& s);

// ||S S^T - C||_F^2.
double gram_residual_sqnorm(const Observation& c, const BlockStack& s);

namespace reference {

Eigen::MatrixXd multiply(const Observation& c, const Eigen::MatrixXd& x);
BlockStack polar_round(const Eigen::MatrixXd& s, int n, int d);
double objective(const Observation& c, const BlockStack& s);
double gram_residual_sqnorm(const Observation& c, const BlockStack& s);

}  // namespace reference

}  // namespace orthosync::kernels
