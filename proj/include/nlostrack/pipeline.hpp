#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "nlostrack/channel.hpp"
#include "nlostrack/channel_tracker.hpp"
#include "nlostrack/position_tracker.hpp"
#include "nlostrack/scene.hpp"
#include "nlostrack/triangulator.hpp"

namespace nlostrack::pipeline {

enum class Mode { two_stage, single_stage };
enum class ReacqPolicy { detector, forced_oracle };

struct RunConfig {
  scene::SceneConfig scene;
  channel::ArrayConfig arrays;
  channel::CodebookKind codebook = channel::CodebookKind::dft;
  channel::GainModel gain_model = channel::GainModel::unit_attenuation;
  tracking::ChannelProcessConfig process;
  tracking::ChangeTestConfig change;
  posfilter::PositionKFConfig poskf;
  triangulation::WeightPolicy weights = triangulation::WeightPolicy::uniform;

  double snr_db = 20.0;
  std::optional<double> noise_var_override;  // bypass the SNR-derived sigma_w^2
  Mode mode = Mode::two_stage;
  std::uint64_t seed = 1;
  int n_steps = 500;
  double init_noise_std = 0.5 * kPi / 180.0;
  double imu_vel_noise_std = 0.2;  // m/s
  double imu_acc_noise_std = 0.2;  // m/s^2
  ReacqPolicy reacq_policy = ReacqPolicy::detector;
  int reacq_deadline = 3;          // steps, reporting only
  double gamma_bracket_deg = 10.0;  // half-width of the orientation search

  double noise_variance() const;
  double duration() const { return static_cast<double>(n_steps) * scene.trajectory.dt; }
  void validate() const;
};

struct StepRecord {
  int t = 0;
  double true_x = 0.0, true_y = 0.0, true_gamma = 0.0;
  double coarse_x = 0.0, coarse_y = 0.0, coarse_gamma = 0.0;
  int coarse_status = 2;  // SolveStatus as int
  double est_x = 0.0, est_y = 0.0, est_gamma = 0.0;
  Eigen::VectorXd psi_hat;           // 2L posterior angle estimate
  std::vector<double> aod_sq_err;    // per path
  std::vector<double> aoa_sq_err;    // per path
  double nis = 0.0;
  double nis_threshold = 0.0;
  bool triggered = false;
  bool reacquired = false;
  int epoch_id = 0;
  bool epoch_boundary = false;
  double pos_error = 0.0;
  Eigen::Matrix<double, 7, 1> s_hat;  // NaN-filled in single_stage mode
  double nees = 0.0;                  // NaN in single_stage mode
};

using ObservationSink = std::function<void(int t, const Eigen::MatrixXcd& beam_matrix)>;

struct RunResult {
  std::vector<StepRecord> records;
  int num_paths = 0;
};

/// One seeded run of the per-step loop: channel EKF -> change test ->
/// (re-acquisition | correction) -> coarse triangulation -> position KF.
RunResult run(const RunConfig& cfg, const ObservationSink& dump_observation = nullptr);

struct DetectionStats {
  int epoch_boundaries = 0;
  int reacquired_within_deadline = 0;
  int deadline_steps = 0;
  int triggers = 0;
  int false_alarms = 0;       // triggers with no boundary within the deadline window
  int eligible_steps = 0;     // steps at which a trigger counts as a false alarm
  double false_alarm_rate = 0.0;
  double liveness_fraction = 0.0;
};

struct SeedStats {
  std::uint64_t seed = 0;
  double median_error = 0.0;
  double p90_error = 0.0;
  double p95_error = 0.0;
  int n_records = 0;
};

struct CampaignResult {
  std::vector<SeedStats> per_seed;
  std::vector<std::pair<double, double>> cdf;  // pooled (error, cdf)
  std::vector<double> aod_mse;                 // per step, within-epoch pooled
  std::vector<double> aoa_mse;
  double aod_mse_mean = 0.0;
  double aoa_mse_mean = 0.0;
  DetectionStats detection;
  double median_error = 0.0;
  double p90_error = 0.0;
  double p95_error = 0.0;
};

DetectionStats detection_stats(std::span<const StepRecord> records, int deadline);

CampaignResult aggregate_runs(const std::vector<std::pair<std::uint64_t, RunResult>>& runs,
                              int deadline);

/// Runs n_seeds (derived deterministically from cfg.seed) and aggregates;
/// fan-out is capped by max_threads and the NLOS_TRACK_THREADS env var.
CampaignResult run_campaign(const RunConfig& cfg, int n_seeds, int max_threads = 0);

std::vector<std::pair<std::uint64_t, RunResult>> run_campaign_raw(const RunConfig& cfg,
                                                                  int n_seeds,
                                                                  int max_threads = 0);

}  // namespace nlostrack::pipeline
