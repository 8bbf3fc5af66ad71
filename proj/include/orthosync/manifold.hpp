#pragma once

#include <Eigen/Core>

namespace orthosync::manifold {

inline constexpr double kOrthogonalityTol = 1e-10;
// Relative to the largest singular value.
inline constexpr double kRankTol = 1e-12;

bool is_orthogonal(const Eigen::MatrixXd& q, double tol = kOrthogonalityTol);

// Tangent condition at an orthogonal base: V base^T + base V^T = 0.
bool is_tangent_at(const Eigen::MatrixXd& base, const Eigen::MatrixXd& v,
                   double tol = kOrthogonalityTol);

double operator_norm(const Eigen::MatrixXd& m);

// Nearest orthogonal matrix (YY^T)^{-1/2} Y, computed from the full SVD.
// Throws RankDeficientError when the smallest singular value is below
// kRankTol relative to the largest (the projection is then ambiguous).
Eigen::MatrixXd polar(const Eigen::MatrixXd& y);

// Proj_base(Y) = Y - (base Y^T + Y base^T) base / 2.
Eigen::MatrixXd tangent_project(const Eigen::MatrixXd& base,
                                const Eigen::MatrixXd& y);

// Riemannian gradient of Phi -> <A, Phi> at an orthogonal Phi.
Eigen::MatrixXd riemannian_gradient(const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& phi);

// Hessian quadratic form of the same objective: -<A Phi^T + Phi A^T, VV^T>/2.
double riemannian_hessian_form(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& phi,
                               const Eigen::MatrixXd& v);

// Polar retraction (I + VV^T)^{-1/2}(phi0 + V) for tangent V at phi0.
Eigen::MatrixXd retract(const Eigen::MatrixXd& phi0, const Eigen::MatrixXd& v);

// Tangent V at phi0 with retract(phi0, V) = phi. Solves the Sylvester
// equation Sigma (phi phi0^T) + (phi0 phi^T) Sigma = 2I for symmetric
// positive Sigma through the d^2 x d^2 Kronecker system, then V is
// Sigma phi - phi0. Throws NotInDomainError when ||phi - phi0|| >= 1 in
// operator norm (the construction can diverge there).
Eigen::MatrixXd invert_retraction(const Eigen::MatrixXd& phi0,
                                  const Eigen::MatrixXd& phi);

}  // namespace orthosync::manifold
