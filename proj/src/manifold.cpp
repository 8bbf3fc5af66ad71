#include "orthosync/manifold.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <sstream>

#include "orthosync/errors.hpp"

namespace orthosync::manifold {

bool is_orthogonal(const Eigen::MatrixXd& q, double tol) {
  const Eigen::Index d = q.cols();
  return (q.transpose() * q - Eigen::MatrixXd::Identity(d, d)).norm() <= tol;
}

bool is_tangent_at(const Eigen::MatrixXd& base, const Eigen::MatrixXd& v,
                   double tol) {
  return (v * base.transpose() + base * v.transpose()).norm() <= tol;
}

double operator_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

Eigen::MatrixXd polar(const Eigen::MatrixXd& y) {
  if (y.rows() != y.cols() || y.rows() < 1)
    throw InvalidDimsError("polar: input must be square, d >= 1");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (smin <= kRankTol * smax || smax == 0.0) {
    std::ostringstream msg;
    msg << "polar: rank-deficient input, smallest singular value " << smin;
    throw RankDeficientError(msg.str());
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& base,
                                const Eigen::MatrixXd& y) {
  return y - 0.5 * (base * y.transpose() + y * base.transpose()) * base;
}

Eigen::MatrixXd riemannian_gradient(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& phi) {
  return tangent_project(phi, a);
}

double riemannian_hessian_form(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd sym = a * phi.transpose() + phi * a.transpose();
  return -0.5 * (sym.array() * (v * v.transpose()).array()).sum();
}

Eigen::MatrixXd retract(const Eigen::MatrixXd& phi0, const Eigen::MatrixXd& v) {
  const Eigen::Index d = phi0.rows();
  const Eigen::MatrixXd gram =
      Eigen::MatrixXd::Identity(d, d) + v * v.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::MatrixXd inv_sqrt =
      eig.eigenvectors() *
      eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
      eig.eigenvectors().transpose();
  return inv_sqrt * (phi0 + v);
}

Eigen::MatrixXd invert_retraction(const Eigen::MatrixXd& phi0,
                                  const Eigen::MatrixXd& phi) {
  const Eigen::Index d = phi0.rows();
  const double dist = operator_norm(phi - phi0);
  if (dist >= 1.0) {
    std::ostringstream msg;
    msg << "invert_retraction: ||phi - phi0|| = " << dist << " >= 1";
    throw NotInDomainError(msg.str());
  }
  // Sigma B + B^T Sigma = 2I with B = phi phi0^T, as a Kronecker system in
  // vec(Sigma) (column-major): (B^T (x) I + I (x) B^T) vec(Sigma) = vec(2I).
  const Eigen::MatrixXd b = phi * phi0.transpose();
  const Eigen::Index dd = d * d;
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(dd, dd);
  for (Eigen::Index p = 0; p < d; ++p)
    for (Eigen::Index q = 0; q < d; ++q) {
      // kron(B^T, I): block (p, q) of size d x d equals B^T(p, q) * I.
      sys.block(p * d, q * d, d, d) +=
          b(q, p) * Eigen::MatrixXd::Identity(d, d);
      // kron(I, B^T): block (p, p) equals B^T.
    }
  for (Eigen::Index p = 0; p < d; ++p)
    sys.block(p * d, p * d, d, d) += b.transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dd);
  for (Eigen::Index j = 0; j < d; ++j) rhs(j * d + j) = 2.0;

  const Eigen::VectorXd vec_sigma = sys.partialPivLu().solve(rhs);
  Eigen::MatrixXd sigma(d, d);
  for (Eigen::Index j = 0; j < d; ++j) sigma.col(j) = vec_sigma.segment(j * d, d);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw NotInDomainError(
        "invert_retraction: Sylvester solution is not positive definite");
  return sigma * phi - phi0;
}

}  // namespace orthosync::manifold
