#pragma once

#include <Eigen/Dense>

namespace nlostrack {

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  int dim() const { return static_cast<int>(mean.size()); }
};

/// Re-symmetrize and clamp negative eigenvalues (below -1e-10 tolerance) to zero.
void condition_covariance(Eigen::MatrixXd& cov);

struct CorrectionResult {
  GaussianBelief posterior;
  double nis = 0.0;  // innovation^T S^-1 innovation with S = J P J^T + R
};

// Joseph-form measurement update with diagonal measurement noise. The gain
// and the NIS statistic are computed in information form (Woodbury), so the
// measurement dimension never appears squared; this keeps the beam-sweep
// update (m = 2*Nr*Nt) cheap. Throws when the innovation covariance is not
// positive definite after regularization.
CorrectionResult kalman_correct(const GaussianBelief& prior, const Eigen::VectorXd& innovation,
                                const Eigen::MatrixXd& jacobian,
                                const Eigen::VectorXd& noise_diag);

CorrectionResult kalman_correct(const GaussianBelief& prior, const Eigen::VectorXd& innovation,
                                const Eigen::MatrixXd& jacobian, double noise_var);

}  // namespace nlostrack
