#include "nlostrack/filters.hpp"

#include <cmath>
#include <stdexcept>

namespace nlostrack {

namespace {
constexpr double kRegFloor = 1e-15;
}

void condition_covariance(Eigen::MatrixXd& cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
  if (es.eigenvalues().minCoeff() >= 0.0) return;
  Eigen::VectorXd vals = es.eigenvalues().cwiseMax(0.0);
  cov = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
}

CorrectionResult kalman_correct(const GaussianBelief& prior, const Eigen::VectorXd& innovation,
                                const Eigen::MatrixXd& jacobian,
                                const Eigen::VectorXd& noise_diag) {
  const Eigen::Index n = prior.mean.size();
  const Eigen::Index m = innovation.size();
  if (prior.cov.rows() != n || prior.cov.cols() != n)
    throw std::invalid_argument("kalman_correct: covariance dimension mismatch");
  if (jacobian.rows() != m || jacobian.cols() != n)
    throw std::invalid_argument("kalman_correct: jacobian dimension mismatch");
  if (noise_diag.size() != m)
    throw std::invalid_argument("kalman_correct: noise dimension mismatch");
  if ((noise_diag.array() < 0.0).any())
    throw std::invalid_argument("kalman_correct: negative noise variance");

  const Eigen::VectorXd d_inv = (noise_diag.array() + kRegFloor).inverse().matrix();

  // Information form: A = P^-1 + J^T D^-1 J; K = A^-1 J^T D^-1.
  Eigen::MatrixXd p_reg = prior.cov;
  p_reg.diagonal().array() += kRegFloor;
  const Eigen::MatrixXd p_inv =
      p_reg.ldlt().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd jt_dinv = jacobian.transpose() * d_inv.asDiagonal();
  const Eigen::MatrixXd a = p_inv + jt_dinv * jacobian;
  const auto a_ldlt = a.ldlt();
  if (a_ldlt.info() != Eigen::Success)
    throw std::runtime_error("kalman_correct: innovation covariance not positive definite");

  const Eigen::MatrixXd gain = a_ldlt.solve(jt_dinv);

  CorrectionResult out;
  out.posterior.mean = prior.mean + gain * innovation;
  const Eigen::MatrixXd closed = Eigen::MatrixXd::Identity(n, n) - gain * jacobian;
  out.posterior.cov = closed * prior.cov * closed.transpose() +
                      gain * noise_diag.asDiagonal() * gain.transpose();
  condition_covariance(out.posterior.cov);

  // NIS via Woodbury: nu^T S^-1 nu = nu^T D^-1 nu - w^T A^-1 w, w = J^T D^-1 nu.
  const Eigen::VectorXd w = jt_dinv * innovation;
  out.nis = innovation.dot(d_inv.asDiagonal() * innovation) - w.dot(a_ldlt.solve(w));
  if (!std::isfinite(out.nis))
    throw std::runtime_error("kalman_correct: innovation covariance not positive definite");
  out.nis = std::max(out.nis, 0.0);
  return out;
}

CorrectionResult kalman_correct(const GaussianBelief& prior, const Eigen::VectorXd& innovation,
                                const Eigen::MatrixXd& jacobian, double noise_var) {
  return kalman_correct(prior, innovation, jacobian,
                        Eigen::VectorXd::Constant(innovation.size(), noise_var));
}

}  // namespace nlostrack
