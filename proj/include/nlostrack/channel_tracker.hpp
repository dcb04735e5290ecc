#pragma once

#include <Eigen/Dense>
#include <deque>
#include <string>
#include <vector>

#include "nlostrack/channel.hpp"
#include "nlostrack/filters.hpp"
#include "nlostrack/geometry.hpp"
#include "nlostrack/rng.hpp"
#include "nlostrack/scene.hpp"

namespace nlostrack::tracking {

// AR(p) angle dynamics: psi(t) = sum_i A_i psi(t-i) + u(t). When
// ar_matrices is empty, A_1 = a1 * I and higher orders are zero. ar_mean
// recentres the model (psi - mean follows the AR recursion); the default
// empty mean keeps the plain zero-mean form.
struct ChannelProcessConfig {
  int ar_order = 1;
  double a1 = 0.95;
  std::vector<Eigen::MatrixXd> ar_matrices;
  Eigen::VectorXd ar_mean;
  double process_noise_var = (0.5 * kPi / 180.0) * (0.5 * kPi / 180.0);

  void validate(int state_dim) const;
  /// Non-empty when the companion-form spectral radius reaches 1 or more.
  std::string stationarity_warning(int state_dim) const;
  Eigen::MatrixXd companion_matrix(int state_dim) const;
  Eigen::VectorXd companion_mean(int state_dim) const;
};

/// Time update on the (companion-stacked) angle belief.
GaussianBelief predict(const GaussianBelief& belief, const ChannelProcessConfig& cfg);

/// h(psi) = vec(C^H H B).
Eigen::VectorXcd measurement_fn(const channel::AngleState& state, const channel::Codebook& cb);

/// Stacked [Re; Im] Jacobian of h w.r.t. psi, (2 Nr Nt) x (2L).
Eigen::MatrixXd measurement_jacobian(const channel::AngleState& state,
                                     const channel::Codebook& cb);

Eigen::VectorXd stack_real(const Eigen::VectorXcd& v);

struct GainEstimate {
  std::vector<channel::PathGain> gains;
  bool full_rank = true;
};

// Least-squares gains given angles. On a rank-deficient regressor the
// previous gains are kept and full_rank is cleared.
GainEstimate estimate_gains(const Eigen::VectorXd& angles, const channel::Observation& obs,
                            const channel::Codebook& cb, const channel::ArrayConfig& arrays,
                            const std::vector<channel::PathGain>* previous = nullptr);

struct UpdateResult {
  GaussianBelief posterior;
  Eigen::VectorXd innovation;  // stacked real, evaluated at the prediction
  double nis = 0.0;
};

// EKF correction with Joseph-form covariance. Complex measurements are
// stacked into reals, so the per-component noise variance is sigma_w^2 / 2.
UpdateResult update(const GaussianBelief& prior, const channel::Observation& obs,
                    const std::vector<channel::PathGain>& gains, const channel::Codebook& cb,
                    double meas_noise_var);

struct ChangeTestConfig {
  double p_fa = 0.05;
  int window = 1;

  void validate() const;
};

struct ChangeTestResult {
  bool triggered = false;
  double statistic = 0.0;
  double threshold = 0.0;
};

double change_threshold(int dof, double p_fa);

ChangeTestResult change_test(double nis_statistic, int dof, const ChangeTestConfig& cfg);

/// Explicit-S form for small problems: statistic = nu^T S^-1 nu.
ChangeTestResult change_test(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& s,
                             const ChangeTestConfig& cfg);

struct Acquisition {
  channel::AngleState state;  // gains zeroed; estimate them from the next observation
  GaussianBelief belief;
};

/// Genie acquisition: mean = true psi + N(0, init_noise_std^2 I),
/// cov = init_noise_std^2 I (stacked for ar_order > 1).
Acquisition reacquire(const scene::SceneFrame& frame, double init_noise_std, RngStream& rng,
                      int ar_order = 1);

// Per-step orchestration of predict / gain LS / correct / change test /
// re-acquire, holding the mutable filter state. One instance per run.
class ChannelTracker {
 public:
  ChannelTracker(channel::ArrayConfig arrays, channel::Codebook cb, ChannelProcessConfig process,
                 ChangeTestConfig change, double meas_noise_var, double init_noise_std,
                 bool detector_reacquire = true);

  struct StepOutput {
    Eigen::VectorXd psi;             // posterior angle estimate (2L)
    Eigen::VectorXd angle_variance;  // posterior diagonal (2L)
    double nis = 0.0;
    double threshold = 0.0;
    bool triggered = false;
    bool reacquired = false;
  };

  StepOutput step(const channel::Observation& obs, const scene::SceneFrame& frame,
                  RngStream& init_rng, bool force_reacquire = false);

  const GaussianBelief& belief() const { return belief_; }
  const std::vector<channel::PathGain>& gains() const { return gains_; }
  int change_dof() const;

 private:
  void acquire(const scene::SceneFrame& frame, const channel::Observation& obs,
               RngStream& init_rng);

  channel::ArrayConfig arrays_;
  channel::Codebook cb_;
  ChannelProcessConfig process_;
  ChangeTestConfig change_;
  double meas_noise_var_;
  double init_noise_std_;
  bool detector_reacquire_;
  bool initialized_ = false;
  GaussianBelief belief_;
  std::vector<channel::PathGain> gains_;
  std::deque<double> nis_window_;
};

}  // namespace nlostrack::tracking
