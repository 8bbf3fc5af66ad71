#include "orthosync/kernels.hpp"

#include <omp.h>

#include <vector>

#include "orthosync/errors.hpp"
#include "orthosync/manifold.hpp"

namespace orthosync::kernels {

void multiply_into(const Observation& c, const Eigen::MatrixXd& x,
                   Eigen::MatrixXd& y) {
  const int n = c.n;
  const int d = c.d;
  y.resize(x.rows(), x.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    y.middleRows(static_cast<Eigen::Index>(i) * d, d).noalias() =
        c.data.middleRows(static_cast<Eigen::Index>(i) * d, d) * x;
  }
}

Eigen::MatrixXd multiply(const Observation& c, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd y;
  multiply_into(c, x, y);
  return y;
}

BlockStack polar_round(const Eigen::MatrixXd& s, int n, int d) {
  BlockStack out(n, d);
  int bad_block = -1;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    try {
      out.block(i) = manifold::polar(s.middleRows(static_cast<Eigen::Index>(i) * d, d));
    } catch (const RankDeficientError&) {
#pragma omp critical
      bad_block = i;
    }
  }
  if (bad_block >= 0) {
    throw RankDeficientError("polar_round: rank-deficient block " +
                             std::to_string(bad_block));
  }
  return out;
}

BlockStack polar_round(const BlockStack& s) {
  return polar_round(s.data, s.n, s.d);
}

double objective(const Observation& c, const BlockStack& s) {
  const Eigen::MatrixXd y = multiply(c, s.data);
  return (y.array() * s.data.array()).sum();
}

double gram_residual_sqnorm(const Observation& c, const BlockStack& s) {
  const int n = s.n;
  const int d = s.d;
  std::vector<double> partial(n, 0.0);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    partial[i] = (s.block(i) * s.data.transpose() -
                  c.data.middleRows(static_cast<Eigen::Index>(i) * d, d))
                     .squaredNorm();
  }
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += partial[i];
  return total;
}

namespace reference {

Eigen::MatrixXd multiply(const Observation& c, const Eigen::MatrixXd& x) {
  const int n = c.n;
  const int d = c.d;
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      y.middleRows(static_cast<Eigen::Index>(i) * d, d) +=
          c.block(i, j) * x.middleRows(static_cast<Eigen::Index>(j) * d, d);
  return y;
}

BlockStack polar_round(const Eigen::MatrixXd& s, int n, int d) {
  BlockStack out(n, d);
  for (int i = 0; i < n; ++i)
    out.block(i) = manifold::polar(s.middleRows(static_cast<Eigen::Index>(i) * d, d));
  return out;
}

double objective(const Observation& c, const BlockStack& s) {
  double acc = 0.0;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      acc += (c.block(i, j).array() *
              (s.block(i) * s.block(j).transpose()).array())
                 .sum();
  return acc;
}

double gram_residual_sqnorm(const Observation& c, const BlockStack& s) {
  double acc = 0.0;
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j)
      acc += (s.block(i) * s.block(j).transpose() - c.block(i, j)).squaredNorm();
  return acc;
}

}  // namespace reference

}  // namespace orthosync::kernels
