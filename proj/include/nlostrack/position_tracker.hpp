#pragma once

#include <Eigen/Dense>
#include <optional>

#include "nlostrack/filters.hpp"
#include "nlostrack/geometry.hpp"
#include "nlostrack/triangulator.hpp"

namespace nlostrack::posfilter {

using Vector7 = Eigen::Matrix<double, 7, 1>;
using Matrix7 = Eigen::Matrix<double, 7, 7>;

// State s = [x, y, vx, vy, ax, ay, gamma]. Orientation follows a random
// walk; the kinematic components follow a constant-acceleration model.
struct PositionKFConfig {
  double dt = 0.1;
  double process_noise_var = 0.01;
  Vector7 meas_noise_var = default_meas_noise();

  static Vector7 default_meas_noise() {
    Vector7 r;
    r << 1.0, 1.0, 0.04, 0.04, 0.04, 0.04, deg2rad(1.0) * deg2rad(1.0);
    return r;
  }

  void validate() const;
};

/// Constant-acceleration transition; per-axis blocks [1 dt dt^2/2; 0 1 dt;
/// 0 0 1] on (pos, vel, acc), identity on gamma.
Matrix7 transition_matrix(double dt);

GaussianBelief kf_predict(const GaussianBelief& belief, const PositionKFConfig& cfg);

struct PosUpdate {
  GaussianBelief posterior;
  double nis = 0.0;
};

/// Linear update with M = I_7 and the orientation innovation wrapped to
/// (-pi, pi].
PosUpdate kf_update(const GaussianBelief& belief, const Vector7& z, const PositionKFConfig& cfg);

struct ImuSample {
  Point2 vel;
  Point2 acc;
};

/// z = [pose.x, pose.y, imu.vx, imu.vy, imu.ax, imu.ay, pose.gamma], or
/// nullopt for a degenerate pose (the caller then runs predict-only).
std::optional<Vector7> assemble_measurement(const triangulation::PoseEstimate& pose,
                                            const ImuSample& imu);

}  // namespace nlostrack::posfilter
