#include "nlostrack/position_tracker.hpp"

#include <cmath>
#include <stdexcept>

namespace nlostrack::posfilter {

void PositionKFConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("position_kf: dt must be > 0");
  if (!(process_noise_var >= 0.0))
    throw std::invalid_argument("position_kf: process_noise_var must be >= 0");
  if ((meas_noise_var.array() < 0.0).any())
    throw std::invalid_argument("position_kf: meas_noise_var must be >= 0");
}

Matrix7 transition_matrix(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("transition_matrix: dt must be > 0");
  Matrix7 f = Matrix7::Identity();
  for (int axis = 0; axis < 2; ++axis) {
    f(axis, axis + 2) = dt;
    f(axis, axis + 4) = 0.5 * dt * dt;
    f(axis + 2, axis + 4) = dt;
  }
  return f;
}

GaussianBelief kf_predict(const GaussianBelief& belief, const PositionKFConfig& cfg) {
  cfg.validate();
  if (belief.dim() != 7) throw std::invalid_argument("kf_predict: state dimension must be 7");
  const Matrix7 f = transition_matrix(cfg.dt);
  GaussianBelief out;
  out.mean = f * belief.mean;
  out.mean(6) = wrap_pi(out.mean(6));
  out.cov = f * belief.cov * f.transpose();
  out.cov.diagonal().array() += cfg.process_noise_var;
  condition_covariance(out.cov);
  return out;
}

PosUpdate kf_update(const GaussianBelief& belief, const Vector7& z, const PositionKFConfig& cfg) {
  cfg.validate();
  if (belief.dim() != 7) throw std::invalid_argument("kf_update: state dimension must be 7");
  if (!z.allFinite()) throw std::invalid_argument("kf_update: non-finite measurement");

  Eigen::VectorXd innovation = z - belief.mean;
  innovation(6) = wrap_pi(innovation(6));

  const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(7, 7);
  auto corr = kalman_correct(belief, innovation, h, Eigen::VectorXd(cfg.meas_noise_var));
  corr.posterior.mean(6) = wrap_pi(corr.posterior.mean(6));
  return {std::move(corr.posterior), corr.nis};
}

std::optional<Vector7> assemble_measurement(const triangulation::PoseEstimate& pose,
                                            const ImuSample& imu) {
  if (pose.status == triangulation::SolveStatus::degenerate) return std::nullopt;
  Vector7 z;
  z << pose.x, pose.y, imu.vel.x, imu.vel.y, imu.acc.x, imu.acc.y, pose.gamma;
  return z;
}

}  // namespace nlostrack::posfilter
