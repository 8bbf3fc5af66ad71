#include "orthosync/newton.hpp"

#include <Eigen/Eigenvalues>
#include <fstream>
#include <limits>

#include "orthosync/errors.hpp"
#include "orthosync/kernels.hpp"
#include "orthosync/manifold.hpp"

namespace orthosync {

namespace {

// Newton step from the block row sum. With X = B Z^T, H = sym(X) and
// K = skew(X), the quadratic-model minimizer on the tangent space is
// V = Omega Z where Omega is the skew solution of H Omega + Omega H = 2 K,
// solved exactly in H's eigenbasis. When H and K commute this collapses to
// the closed form H^{-1} K Z.
NewtonEntry newton_entry_from_row(const Eigen::MatrixXd& x,
                                  const Eigen::MatrixXd& zi,
                                  const Eigen::MatrixXd& estimate_block,
                                  int block) {
  const Eigen::MatrixXd h = 0.5 * (x + x.transpose());
  const Eigen::MatrixXd k = 0.5 * (x - x.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
  const Eigen::VectorXd& lam = eig.eigenvalues();
  if (lam(0) <= 0.0)
    throw HessianNotPdError("hessian not positive definite at block " +
                            std::to_string(block) +
                            " (lambda_min = " + std::to_string(lam(0)) + ")");
  const Eigen::MatrixXd k_rot =
      eig.eigenvectors().transpose() * k * eig.eigenvectors();
  const Eigen::Index d = h.rows();
  Eigen::MatrixXd omega_rot(d, d);
  for (Eigen::Index p = 0; p < d; ++p)
    for (Eigen::Index q = 0; q < d; ++q)
      omega_rot(p, q) = 2.0 * k_rot(p, q) / (lam(p) + lam(q));
  const Eigen::MatrixXd omega =
      eig.eigenvectors() * omega_rot * eig.eigenvectors().transpose();
  const Eigen::MatrixXd h_inv = eig.eigenvectors() *
                                lam.cwiseInverse().asDiagonal() *
                                eig.eigenvectors().transpose();

  NewtonEntry entry;
  entry.hessian = h;
  entry.lambda_min_h = lam(0);
  entry.lambda_max_h = lam(d - 1);
  entry.v_tilde = omega * zi;
  entry.z_tilde = manifold::retract(zi, entry.v_tilde);
  entry.v_hat = manifold::invert_retraction(zi, estimate_block);
  entry.vtilde_norm = entry.v_tilde.norm();
  entry.vhat_norm = entry.v_hat.norm();
  entry.gap_v = (entry.v_hat - entry.v_tilde).norm();
  entry.gap_v_closed = (entry.v_hat - h_inv * k * zi).norm();
  entry.gap_z = (estimate_block - entry.z_tilde).norm();
  return entry;
}

NewtonEntry mle_entry(const Eigen::MatrixXd& bi, const Eigen::MatrixXd& zi,
                      const Eigen::MatrixXd& zhat_i, int i) {
  return newton_entry_from_row(bi * zi.transpose(), zi, zhat_i, i);
}

NewtonEntry spectral_entry(const Eigen::MatrixXd& ai, const Eigen::MatrixXd& si,
                           const Eigen::MatrixXd& zi,
                           const Eigen::MatrixXd& zeig_i, int i) {
  const Eigen::MatrixXd pi = si.transpose() * si;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pi);
  if (eig.eigenvalues()(0) <= 1e-12)
    throw RankDeficientError("Pi block " + std::to_string(i) +
                             " is numerically singular");
  const Eigen::MatrixXd pi_half = eig.eigenvectors() *
                                  eig.eigenvalues().cwiseSqrt().asDiagonal() *
                                  eig.eigenvectors().transpose();
  return newton_entry_from_row(-ai * pi_half * zi.transpose(), zi, zeig_i, i);
}

template <typename MakeEntry>
std::vector<NewtonReportRow> build_report(int n, MakeEntry&& make) {
  std::vector<NewtonReportRow> rows(n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    rows[i].block = i;
    try {
      rows[i].entry = make(i);
      rows[i].ok = true;
    } catch (const HessianNotPdError& e) {
      rows[i].error = "HessianNotPD";
    } catch (const NotInDomainError& e) {
      rows[i].error = "NotInDomain";
    } catch (const RankDeficientError& e) {
      rows[i].error = "RankDeficient";
    }
  }
  return rows;
}

}  // namespace

NewtonEntry mle_newton_step(const SyncProblem& problem,
                            const BlockStack& z_hat_aligned, int i) {
  const int d = problem.truth.d;
  const Eigen::MatrixXd bi =
      problem.observation.data.middleRows(static_cast<Eigen::Index>(i) * d, d) *
      z_hat_aligned.data;
  return mle_entry(bi, problem.truth.block(i), z_hat_aligned.block(i), i);
}

NewtonEntry spectral_newton_step(const SyncProblem& problem,
                                 const BlockStack& s_eig_aligned,
                                 const BlockStack& z_eig_aligned, int i) {
  const int d = problem.truth.d;
  const Eigen::MatrixXd ai =
      -(problem.observation.data.middleRows(static_cast<Eigen::Index>(i) * d, d) *
        s_eig_aligned.data);
  return spectral_entry(ai, s_eig_aligned.block(i), problem.truth.block(i),
                        z_eig_aligned.block(i), i);
}

double quadratic_model_value(const Eigen::MatrixXd& a,
                             const Eigen::MatrixXd& phi0,
                             const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd h =
      -0.5 * (a * phi0.transpose() + phi0 * a.transpose());
  return (a.array() * phi0.array()).sum() + (a.array() * v.array()).sum() +
         0.5 * (h.array() * (v * v.transpose()).array()).sum();
}

std::vector<NewtonReportRow> mle_newton_report(const SyncProblem& problem,
                                               const BlockStack& z_hat_aligned) {
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  const Eigen::MatrixXd b =
      kernels::multiply(problem.observation, z_hat_aligned.data);
  return build_report(n, [&](int i) {
    return mle_entry(b.middleRows(static_cast<Eigen::Index>(i) * d, d),
                     problem.truth.block(i), z_hat_aligned.block(i), i);
  });
}

std::vector<NewtonReportRow> spectral_newton_report(
    const SyncProblem& problem, const BlockStack& s_eig_aligned,
    const BlockStack& z_eig_aligned) {
  const int n = problem.truth.n;
  const int d = problem.truth.d;
  const Eigen::MatrixXd a =
      kernels::multiply(problem.observation, s_eig_aligned.data);
  return build_report(n, [&](int i) {
    return spectral_entry(-a.middleRows(static_cast<Eigen::Index>(i) * d, d),
                          s_eig_aligned.block(i), problem.truth.block(i),
                          z_eig_aligned.block(i), i);
  });
}

void write_newton_csv(const std::vector<NewtonReportRow>& rows,
                      const std::string& path, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "# seed=" << seed << "\n";
  out << "i,vtilde_norm,vhat_norm,gap_V,gap_V_closed,gap_Z,lambda_min_H,"
         "lambda_max_H,error\n";
  for (const auto& row : rows) {
    if (row.ok) {
      const auto& e = row.entry;
      out << row.block << ',' << e.vtilde_norm << ',' << e.vhat_norm << ','
          << e.gap_v << ',' << e.gap_v_closed << ',' << e.gap_z << ','
          << e.lambda_min_h << ',' << e.lambda_max_h << ",\n";
    } else {
      out << row.block << ",,,,,,,," << row.error << "\n";
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace orthosync
