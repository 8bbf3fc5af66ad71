#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "orthosync/estimators.hpp"
#include "orthosync/model.hpp"

namespace orthosync {

// One-step Newton approximation at the ground truth. Consumers must pass
// estimators pre-rotated so polar(Z^T estimate) = I (align_to does this);
// the whole stack is rotated once rather than per block.
struct NewtonEntry {
  Eigen::MatrixXd v_tilde;   // Newton step, tangent at Z_i
  Eigen::MatrixXd z_tilde;   // retract(Z_i, v_tilde)
  Eigen::MatrixXd v_hat;     // inverse retraction of the estimator block
  Eigen::MatrixXd hessian;   // H_i (or H_i^eig), symmetric
  double vtilde_norm = 0.0;
  double vhat_norm = 0.0;
  double gap_v = 0.0;        // ||v_hat - v_tilde||_F
  // Gap to the commuting-case closed form H^{-1} K Z_i. The closed form is
  // only tangent when H and K commute; its gap to the estimator scales
  // quadratically in the noise, whereas the constrained step above tracks
  // the estimator to higher order. Reported separately so both scalings are
  // visible.
  double gap_v_closed = 0.0;
  double gap_z = 0.0;        // ||Zhat_i - z_tilde||_F
  double lambda_min_h = 0.0;
  double lambda_max_h = 0.0;
};

// H_i = sum_j (C_ij Zhat_j Z_i^T + Z_i Zhat_j^T C_ji) / 2,
// v_tilde = H_i^{-1} sum_j (C_ij Zhat_j Z_i^T - Z_i Zhat_j^T C_ji) Z_i / 2.
// Throws HessianNotPdError when lambda_min(H_i) <= 0 and NotInDomainError
// when the estimator block is too far from Z_i to invert the retraction.
NewtonEntry mle_newton_step(const SyncProblem& problem,
                            const BlockStack& z_hat_aligned, int i);

// Spectral variant: A_i = -sum_j C_ij S_j, H = -(A_i Pi^{1/2} Z_i^T +
// Z_i Pi^{1/2} A_i^T)/2, v_tilde = -H^{-1}(A_i Pi^{1/2} + H Z_i), with
// Pi = S_i^T S_i. Both the unrounded and rounded stacks must be in the
// aligned frame of polar(Z^T S) = I.
NewtonEntry spectral_newton_step(const SyncProblem& problem,
                                 const BlockStack& s_eig_aligned,
                                 const BlockStack& z_eig_aligned, int i);

// Quadratic model <A, phi0> + <A, V> + <H, V V^T>/2 at tangent V, with
// H = -(A phi0^T + phi0 A^T)/2.
double quadratic_model_value(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& phi0,
                             const Eigen::MatrixXd& v);

struct NewtonReportRow {
  int block = 0;
  bool ok = false;
  std::string error;  // empty when ok
  NewtonEntry entry;  // valid when ok
};

// Per-block reports over the whole stack; block failures are recorded, not
// thrown.
std::vector<NewtonReportRow> mle_newton_report(const SyncProblem& problem,
                                               const BlockStack& z_hat_aligned);
std::vector<NewtonReportRow> spectral_newton_report(
    const SyncProblem& problem, const BlockStack& s_eig_aligned,
    const BlockStack& z_eig_aligned);

// CSV columns: i, vtilde_norm, vhat_norm, gap_V, gap_Z, lambda_min_H,
// lambda_max_H (failed blocks carry the error tag instead of numbers).
void write_newton_csv(const std::vector<NewtonReportRow>& rows,
                      const std::string& path, std::uint64_t seed);

}  // namespace orthosync
