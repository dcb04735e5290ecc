#include "nlostrack/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "nlostrack/stats.hpp"

namespace nlostrack::pipeline {

double RunConfig::noise_variance() const {
  if (noise_var_override) return *noise_var_override;
  return channel::noise_variance_from_snr(std::pow(10.0, snr_db / 10.0), arrays);
}

void RunConfig::validate() const {
  arrays.validate();
  scene.scatterers.validate();
  if (n_steps < 1) throw std::invalid_argument("run: n_steps must be >= 1");
  if (noise_var_override && *noise_var_override < 0.0)
    throw std::invalid_argument("run: noise_var_override must be >= 0");
  if (init_noise_std < 0.0) throw std::invalid_argument("run: init_noise_std must be >= 0");
  if (imu_vel_noise_std < 0.0 || imu_acc_noise_std < 0.0)
    throw std::invalid_argument("run: IMU noise must be >= 0");
  if (reacq_deadline < 1) throw std::invalid_argument("run: reacq_deadline must be >= 1");
  change.validate();
  poskf.validate();
  process.validate(2 * scene.scatterers.num_paths);
  scene::TrajectoryConfig traj = scene.trajectory;
  traj.duration = duration();
  traj.validate();
}

namespace {

GaussianBelief initial_position_belief(const triangulation::PoseEstimate& coarse,
                                       const posfilter::PositionKFConfig& cfg) {
  GaussianBelief b;
  b.mean = Eigen::VectorXd::Zero(7);
  b.mean(0) = coarse.x;
  b.mean(1) = coarse.y;
  b.mean(6) = coarse.gamma;
  Eigen::VectorXd d(7);
  d << std::max(cfg.meas_noise_var(0), 1e-12), std::max(cfg.meas_noise_var(1), 1e-12), 100.0,
      100.0, 100.0, 100.0, std::max(cfg.meas_noise_var(6), 1e-12);
  b.cov = d.asDiagonal();
  return b;
}

}  // namespace

RunResult run(const RunConfig& cfg, const ObservationSink& dump_observation) {
  cfg.validate();

  RngStream scene_rng(cfg.seed, "scene");
  RngStream noise_rng(cfg.seed, "noise");
  RngStream init_rng(cfg.seed, "init");
  RngStream imu_rng(cfg.seed, "imu");

  scene::SceneConfig scene_cfg = cfg.scene;
  scene_cfg.trajectory.duration = cfg.duration();
  const auto frames = scene::build_scene(scene_cfg, scene_rng);
  const int L = cfg.scene.scatterers.num_paths;

  const auto cb = channel::make_codebook(cfg.arrays, cfg.codebook);
  const double noise_var = cfg.noise_variance();

  tracking::ChannelTracker tracker(cfg.arrays, cb, cfg.process, cfg.change, noise_var,
                                   cfg.init_noise_std,
                                   cfg.reacq_policy == ReacqPolicy::detector);

  posfilter::PositionKFConfig poskf = cfg.poskf;
  poskf.dt = cfg.scene.trajectory.dt;

  GaussianBelief pos_belief;
  bool pos_initialized = false;
  std::optional<double> prev_coarse_gamma;

  RunResult result;
  result.num_paths = L;
  result.records.reserve(static_cast<std::size_t>(cfg.n_steps));

  for (int t = 0; t < cfg.n_steps; ++t) {
    const auto& frame = frames[static_cast<std::size_t>(t)];
    const bool boundary =
        t > 0 && frame.epoch_id != frames[static_cast<std::size_t>(t - 1)].epoch_id;

    const auto true_gains = channel::synthesize_gains(frame, cfg.arrays, cfg.gain_model);
    const auto true_state = channel::make_angle_state(frame, true_gains);
    const auto obs = channel::observe(true_state, cb, noise_var, noise_rng, t);
    if (dump_observation) dump_observation(t, obs.beam_matrix);

    const bool force = cfg.reacq_policy == ReacqPolicy::forced_oracle && boundary;
    const auto track = tracker.step(obs, frame, init_rng, force);

    StepRecord rec;
    rec.t = t;
    rec.true_x = frame.ue_pos.x;
    rec.true_y = frame.ue_pos.y;
    rec.true_gamma = frame.gamma;
    rec.psi_hat = track.psi;
    rec.nis = track.nis;
    rec.nis_threshold = track.threshold;
    rec.triggered = track.triggered;
    rec.reacquired = track.reacquired;
    rec.epoch_id = frame.epoch_id;
    rec.epoch_boundary = boundary;

    rec.aod_sq_err.resize(static_cast<std::size_t>(L));
    rec.aoa_sq_err.resize(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      const double de = wrap_pi(track.psi(l) - frame.aod[static_cast<std::size_t>(l)]);
      const double da = wrap_pi(track.psi(L + l) - frame.aoa[static_cast<std::size_t>(l)]);
      rec.aod_sq_err[static_cast<std::size_t>(l)] = de * de;
      rec.aoa_sq_err[static_cast<std::size_t>(l)] = da * da;
    }

    // Position-KF time update first: its prior orientation seeds the
    // triangulator in two_stage mode.
    GaussianBelief pos_prior;
    if (cfg.mode == Mode::two_stage && pos_initialized)
      pos_prior = posfilter::kf_predict(pos_belief, poskf);

    std::vector<double> variances(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l)
      variances[static_cast<std::size_t>(l)] =
          track.angle_variance(l) + track.angle_variance(L + l);
    const auto betas = triangulation::path_weights(cfg.weights, variances);

    std::vector<triangulation::PathMeasurement> paths(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      auto& p = paths[static_cast<std::size_t>(l)];
      p.aod = track.psi(l);
      p.aoa = track.psi(L + l);
      p.range = frame.path_len[static_cast<std::size_t>(l)];  // genie range measurements
      p.weight = betas[static_cast<std::size_t>(l)];
    }

    triangulation::SolveOptions opts;
    opts.gamma_bracket = deg2rad(cfg.gamma_bracket_deg);
    if (cfg.mode == Mode::two_stage && pos_initialized)
      opts.gamma_init = pos_prior.mean(6);
    else if (cfg.mode == Mode::single_stage && prev_coarse_gamma)
      opts.gamma_init = *prev_coarse_gamma;

    const auto coarse = triangulation::solve_pose(paths, cfg.scene.bs_pos, opts);
    rec.coarse_x = coarse.x;
    rec.coarse_y = coarse.y;
    rec.coarse_gamma = coarse.gamma;
    rec.coarse_status = static_cast<int>(coarse.status);

    if (cfg.mode == Mode::two_stage) {
      const posfilter::ImuSample imu{
          {frame.vel.x + imu_rng.normal(0.0, cfg.imu_vel_noise_std),
           frame.vel.y + imu_rng.normal(0.0, cfg.imu_vel_noise_std)},
          {frame.acc.x + imu_rng.normal(0.0, cfg.imu_acc_noise_std),
           frame.acc.y + imu_rng.normal(0.0, cfg.imu_acc_noise_std)}};

      if (!pos_initialized) {
        pos_belief = initial_position_belief(coarse, poskf);
        if (coarse.status != triangulation::SolveStatus::degenerate) {
          const auto z = posfilter::assemble_measurement(coarse, imu);
          pos_belief = posfilter::kf_update(pos_belief, *z, poskf).posterior;
        }
        pos_initialized = true;
      } else {
        const auto z = posfilter::assemble_measurement(coarse, imu);
        if (z)
          pos_belief = posfilter::kf_update(pos_prior, *z, poskf).posterior;
        else
          pos_belief = pos_prior;  // degenerate pose: predict-only step
      }

      rec.s_hat = pos_belief.mean;
      rec.est_x = pos_belief.mean(0);
      rec.est_y = pos_belief.mean(1);
      rec.est_gamma = pos_belief.mean(6);

      Eigen::VectorXd err(7);
      err << rec.est_x - frame.ue_pos.x, rec.est_y - frame.ue_pos.y,
          pos_belief.mean(2) - frame.vel.x, pos_belief.mean(3) - frame.vel.y,
          pos_belief.mean(4) - frame.acc.x, pos_belief.mean(5) - frame.acc.y,
          wrap_pi(rec.est_gamma - frame.gamma);
      Eigen::MatrixXd p_reg = pos_belief.cov;
      p_reg.diagonal().array() += 1e-15;
      rec.nees = err.dot(p_reg.ldlt().solve(err));
    } else {
      rec.est_x = coarse.x;
      rec.est_y = coarse.y;
      rec.est_gamma = coarse.gamma;
      rec.s_hat.setConstant(std::numeric_limits<double>::quiet_NaN());
      rec.nees = std::numeric_limits<double>::quiet_NaN();
      if (coarse.status != triangulation::SolveStatus::degenerate)
        prev_coarse_gamma = coarse.gamma;
    }

    const double dx = rec.est_x - rec.true_x;
    const double dy = rec.est_y - rec.true_y;
    rec.pos_error = std::hypot(dx, dy);

    result.records.push_back(std::move(rec));
  }
  return result;
}

DetectionStats detection_stats(std::span<const StepRecord> records, int deadline) {
  DetectionStats st;
  st.deadline_steps = deadline;

  std::vector<int> boundaries;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].epoch_boundary) boundaries.push_back(static_cast<int>(i));
  st.epoch_boundaries = static_cast<int>(boundaries.size());

  for (int b : boundaries) {
    for (int k = 0; k < deadline && b + k < static_cast<int>(records.size()); ++k) {
      if (records[static_cast<std::size_t>(b + k)].reacquired) {
        ++st.reacquired_within_deadline;
        break;
      }
    }
  }
  st.liveness_fraction = st.epoch_boundaries > 0
                             ? static_cast<double>(st.reacquired_within_deadline) /
                                   static_cast<double>(st.epoch_boundaries)
                             : 1.0;

  // A trigger counts as a false alarm when no epoch boundary happened within
  // the deadline window ending at that step. Step 0 is the acquisition step.
  for (std::size_t i = 1; i < records.size(); ++i) {
    bool near_boundary = false;
    for (int k = 0; k < deadline; ++k) {
      const long j = static_cast<long>(i) - k;
      if (j >= 0 && records[static_cast<std::size_t>(j)].epoch_boundary) {
        near_boundary = true;
        break;
      }
    }
    if (near_boundary) continue;
    ++st.eligible_steps;
    if (records[i].triggered) ++st.false_alarms;
  }
  for (std::size_t i = 1; i < records.size(); ++i)
    if (records[i].triggered) ++st.triggers;
  st.false_alarm_rate = st.eligible_steps > 0 ? static_cast<double>(st.false_alarms) /
                                                    static_cast<double>(st.eligible_steps)
                                              : 0.0;
  return st;
}

CampaignResult aggregate_runs(const std::vector<std::pair<std::uint64_t, RunResult>>& runs,
                              int deadline) {
  if (runs.empty()) throw std::invalid_argument("aggregate_runs: no runs");

  CampaignResult out;
  std::vector<double> pooled;
  std::size_t max_steps = 0;
  for (const auto& [seed, rr] : runs) max_steps = std::max(max_steps, rr.records.size());

  std::vector<double> aod_sum(max_steps, 0.0), aoa_sum(max_steps, 0.0);
  std::vector<int> counts(max_steps, 0);
  double aod_total = 0.0, aoa_total = 0.0;
  long total_angle_terms = 0;

  DetectionStats pooled_det;
  pooled_det.deadline_steps = deadline;

  for (const auto& [seed, rr] : runs) {
    std::vector<double> errors;
    errors.reserve(rr.records.size());
    for (const auto& r : rr.records) errors.push_back(r.pos_error);
    pooled.insert(pooled.end(), errors.begin(), errors.end());
    std::sort(errors.begin(), errors.end());

    SeedStats ss;
    ss.seed = seed;
    ss.n_records = static_cast<int>(errors.size());
    ss.median_error = stats::quantile_sorted(errors, 0.5);
    ss.p90_error = stats::quantile_sorted(errors, 0.9);
    ss.p95_error = stats::quantile_sorted(errors, 0.95);
    out.per_seed.push_back(ss);

    for (std::size_t i = 0; i < rr.records.size(); ++i) {
      const auto& r = rr.records[i];
      if (r.epoch_boundary) continue;  // within-epoch steps only
      double ae = 0.0, aa = 0.0;
      for (double v : r.aod_sq_err) ae += v;
      for (double v : r.aoa_sq_err) aa += v;
      const auto L = static_cast<double>(r.aod_sq_err.size());
      aod_sum[i] += ae / L;
      aoa_sum[i] += aa / L;
      counts[i] += 1;
      aod_total += ae;
      aoa_total += aa;
      total_angle_terms += static_cast<long>(r.aod_sq_err.size());
    }

    const auto det = detection_stats(rr.records, deadline);
    pooled_det.epoch_boundaries += det.epoch_boundaries;
    pooled_det.reacquired_within_deadline += det.reacquired_within_deadline;
    pooled_det.triggers += det.triggers;
    pooled_det.false_alarms += det.false_alarms;
    pooled_det.eligible_steps += det.eligible_steps;
  }

  pooled_det.false_alarm_rate =
      pooled_det.eligible_steps > 0
          ? static_cast<double>(pooled_det.false_alarms) / pooled_det.eligible_steps
          : 0.0;
  pooled_det.liveness_fraction =
      pooled_det.epoch_boundaries > 0
          ? static_cast<double>(pooled_det.reacquired_within_deadline) /
                pooled_det.epoch_boundaries
          : 1.0;
  out.detection = pooled_det;

  out.aod_mse.resize(max_steps, 0.0);
  out.aoa_mse.resize(max_steps, 0.0);
  for (std::size_t i = 0; i < max_steps; ++i) {
    if (counts[i] > 0) {
      out.aod_mse[i] = aod_sum[i] / counts[i];
      out.aoa_mse[i] = aoa_sum[i] / counts[i];
    }
  }
  if (total_angle_terms > 0) {
    out.aod_mse_mean = aod_total / static_cast<double>(total_angle_terms);
    out.aoa_mse_mean = aoa_total / static_cast<double>(total_angle_terms);
  }

  std::sort(pooled.begin(), pooled.end());
  out.median_error = stats::quantile_sorted(pooled, 0.5);
  out.p90_error = stats::quantile_sorted(pooled, 0.9);
  out.p95_error = stats::quantile_sorted(pooled, 0.95);

  out.cdf.reserve(pooled.size());
  const double n = static_cast<double>(pooled.size());
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (i + 1 < pooled.size() && pooled[i + 1] == pooled[i]) continue;
    out.cdf.emplace_back(pooled[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

std::vector<std::pair<std::uint64_t, RunResult>> run_campaign_raw(const RunConfig& cfg,
                                                                  int n_seeds, int max_threads) {
  if (n_seeds < 1) throw std::invalid_argument("run_campaign: n_seeds must be >= 1");

  int threads = max_threads > 0 ? max_threads : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* env = std::getenv("NLOS_TRACK_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) threads = std::min(threads, cap);
  }
  threads = std::min(threads, n_seeds);

  std::vector<std::pair<std::uint64_t, RunResult>> results(static_cast<std::size_t>(n_seeds));
  std::atomic<int> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&]() {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n_seeds) break;
      try {
        RunConfig rc = cfg;
        rc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
        results[static_cast<std::size_t>(i)] = {rc.seed, run(rc)};
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

CampaignResult run_campaign(const RunConfig& cfg, int n_seeds, int max_threads) {
  return aggregate_runs(run_campaign_raw(cfg, n_seeds, max_threads), cfg.reacq_deadline);
}

}  // namespace nlostrack::pipeline
