#include "nlostrack/channel_tracker.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nlostrack/stats.hpp"

namespace nlostrack::tracking {

void ChannelProcessConfig::validate(int state_dim) const {
  if (ar_order < 1) throw std::invalid_argument("process: ar_order must be >= 1");
  if (!(process_noise_var >= 0.0))
    throw std::invalid_argument("process: process_noise_var must be >= 0");
  if (!ar_matrices.empty()) {
    if (static_cast<int>(ar_matrices.size()) != ar_order)
      throw std::invalid_argument("process: ar_matrices size must equal ar_order");
    for (const auto& a : ar_matrices)
      if (a.rows() != state_dim || a.cols() != state_dim)
        throw std::invalid_argument("process: ar matrix dimension mismatch");
  }
  if (ar_mean.size() != 0 && ar_mean.size() != state_dim)
    throw std::invalid_argument("process: ar_mean dimension mismatch");
}

Eigen::MatrixXd ChannelProcessConfig::companion_matrix(int state_dim) const {
  const int p = ar_order;
  const int n = state_dim * p;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < p; ++i) {
    if (!ar_matrices.empty())
      a.block(0, i * state_dim, state_dim, state_dim) = ar_matrices[static_cast<std::size_t>(i)];
    else if (i == 0)
      a.block(0, 0, state_dim, state_dim) =
          a1 * Eigen::MatrixXd::Identity(state_dim, state_dim);
  }
  if (p > 1)
    a.block(state_dim, 0, state_dim * (p - 1), state_dim * (p - 1)) =
        Eigen::MatrixXd::Identity(state_dim * (p - 1), state_dim * (p - 1));
  return a;
}

Eigen::VectorXd ChannelProcessConfig::companion_mean(int state_dim) const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(state_dim * ar_order);
  if (ar_mean.size() == state_dim)
    for (int i = 0; i < ar_order; ++i) m.segment(i * state_dim, state_dim) = ar_mean;
  return m;
}

std::string ChannelProcessConfig::stationarity_warning(int state_dim) const {
  const Eigen::MatrixXd a = companion_matrix(state_dim);
  const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
  if (radius >= 1.0 - 1e-12)
    return "angle process is not strictly stationary (companion spectral radius " +
           std::to_string(radius) + ")";
  return {};
}

GaussianBelief predict(const GaussianBelief& belief, const ChannelProcessConfig& cfg) {
  const int n = belief.dim();
  if (n % cfg.ar_order != 0)
    throw std::invalid_argument("predict: belief dimension incompatible with ar_order");
  const int state_dim = n / cfg.ar_order;
  cfg.validate(state_dim);

  const Eigen::MatrixXd a = cfg.companion_matrix(state_dim);
  const Eigen::VectorXd mean_offset = cfg.companion_mean(state_dim);

  GaussianBelief out;
  out.mean = mean_offset + a * (belief.mean - mean_offset);
  out.cov = a * belief.cov * a.transpose();
  out.cov.topLeftCorner(state_dim, state_dim).diagonal().array() += cfg.process_noise_var;
  condition_covariance(out.cov);
  return out;
}

Eigen::VectorXcd measurement_fn(const channel::AngleState& state, const channel::Codebook& cb) {
  channel::ArrayConfig arrays;
  arrays.n_rx = static_cast<int>(cb.rx_beams.rows());
  arrays.n_tx = static_cast<int>(cb.tx_beams.rows());
  const Eigen::MatrixXcd y = cb.rx_beams.adjoint() * build_channel(state, arrays) * cb.tx_beams;
  return Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size());
}

Eigen::VectorXd stack_real(const Eigen::VectorXcd& v) {
  Eigen::VectorXd out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

Eigen::MatrixXd measurement_jacobian(const channel::AngleState& state,
                                     const channel::Codebook& cb) {
  const int L = state.num_paths();
  const int n_rx = static_cast<int>(cb.rx_beams.rows());
  const int n_tx = static_cast<int>(cb.tx_beams.rows());
  const Eigen::Index m = static_cast<Eigen::Index>(n_rx) * n_tx;

  Eigen::MatrixXcd jc(m, 2 * L);
  for (int l = 0; l < L; ++l) {
    const auto alpha = state.gains[static_cast<std::size_t>(l)].alpha;
    const Eigen::VectorXcd u = cb.rx_beams.adjoint() * channel::steering_rx(state.aoa(l), n_rx);
    const Eigen::RowVectorXcd v =
        channel::steering_tx(state.aod(l), n_tx).adjoint() * cb.tx_beams;
    const Eigen::VectorXcd du =
        cb.rx_beams.adjoint() * channel::steering_derivative(state.aoa(l), n_rx);
    const Eigen::RowVectorXcd dv =
        channel::steering_derivative(state.aod(l), n_tx).adjoint() * cb.tx_beams;

    const Eigen::MatrixXcd d_phi = alpha * u * dv;  // a_t^H differentiates by the conjugate rule
    const Eigen::MatrixXcd d_theta = alpha * du * v;
    jc.col(l) = Eigen::Map<const Eigen::VectorXcd>(d_phi.data(), m);
    jc.col(L + l) = Eigen::Map<const Eigen::VectorXcd>(d_theta.data(), m);
  }

  Eigen::MatrixXd j(2 * m, 2 * L);
  j.topRows(m) = jc.real();
  j.bottomRows(m) = jc.imag();
  return j;
}

GainEstimate estimate_gains(const Eigen::VectorXd& angles, const channel::Observation& obs,
                            const channel::Codebook& cb, const channel::ArrayConfig& arrays,
                            const std::vector<channel::PathGain>* previous) {
  if (angles.size() % 2 != 0) throw std::invalid_argument("estimate_gains: angle vector length");
  const int L = static_cast<int>(angles.size() / 2);
  const Eigen::Index m = obs.beam_matrix.size();

  Eigen::MatrixXcd g(m, L);
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXcd u =
        cb.rx_beams.adjoint() * channel::steering_rx(angles(L + l), arrays.n_rx);
    const Eigen::RowVectorXcd v =
        channel::steering_tx(angles(l), arrays.n_tx).adjoint() * cb.tx_beams;
    const Eigen::MatrixXcd col = u * v;
    g.col(l) = Eigen::Map<const Eigen::VectorXcd>(col.data(), m);
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);

  GainEstimate out;
  if (!(smin > smax * 1e-10)) {
    out.full_rank = false;
    if (previous && static_cast<int>(previous->size()) == L) {
      out.gains = *previous;
    } else {
      out.gains.assign(static_cast<std::size_t>(L), channel::PathGain{});
    }
    return out;
  }

  const Eigen::VectorXcd alpha = svd.solve(obs.vectorized());
  const double array_gain = std::sqrt(static_cast<double>(arrays.n_tx * arrays.n_rx));
  const double lambda = arrays.wavelength();
  out.gains.resize(static_cast<std::size_t>(L));
  for (int l = 0; l < L; ++l) {
    auto& gsl = out.gains[static_cast<std::size_t>(l)];
    gsl.alpha = alpha(l);
    gsl.rho = std::abs(alpha(l)) / array_gain;
    double cycles = -std::arg(alpha(l)) / (2.0 * kPi);
    cycles -= std::floor(cycles);
    gsl.delta = cycles * lambda;
  }
  return out;
}

UpdateResult update(const GaussianBelief& prior, const channel::Observation& obs,
                    const std::vector<channel::PathGain>& gains, const channel::Codebook& cb,
                    double meas_noise_var) {
  const int L = static_cast<int>(gains.size());
  if (prior.dim() % (2 * L) != 0)
    throw std::invalid_argument("update: belief dimension incompatible with path count");

  channel::AngleState state{prior.mean.head(2 * L), gains};
  const Eigen::VectorXd innovation = stack_real(obs.vectorized() - measurement_fn(state, cb));

  const Eigen::MatrixXd j_angles = measurement_jacobian(state, cb);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(j_angles.rows(), prior.dim());
  j.leftCols(2 * L) = j_angles;

  const auto corr = kalman_correct(prior, innovation, j, meas_noise_var / 2.0);
  return {corr.posterior, innovation, corr.nis};
}

void ChangeTestConfig::validate() const {
  if (!(p_fa > 0.0 && p_fa < 1.0)) throw std::invalid_argument("change_test: p_fa in (0, 1)");
  if (window < 1) throw std::invalid_argument("change_test: window must be >= 1");
}

double change_threshold(int dof, double p_fa) {
  return stats::chi2_quantile(1.0 - p_fa, static_cast<double>(dof));
}

ChangeTestResult change_test(double nis_statistic, int dof, const ChangeTestConfig& cfg) {
  cfg.validate();
  ChangeTestResult r;
  r.statistic = nis_statistic;
  r.threshold = change_threshold(dof, cfg.p_fa);
  r.triggered = r.statistic > r.threshold;
  return r;
}

ChangeTestResult change_test(const Eigen::VectorXd& innovation, const Eigen::MatrixXd& s,
                             const ChangeTestConfig& cfg) {
  const auto ldlt = s.ldlt();
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
    throw std::runtime_error("change_test: innovation covariance not positive definite");
  const double stat = innovation.dot(ldlt.solve(innovation));
  return change_test(stat, static_cast<int>(innovation.size()), cfg);
}

Acquisition reacquire(const scene::SceneFrame& frame, double init_noise_std, RngStream& rng,
                      int ar_order) {
  if (init_noise_std < 0.0) throw std::invalid_argument("reacquire: init_noise_std must be >= 0");
  if (ar_order < 1) throw std::invalid_argument("reacquire: ar_order must be >= 1");
  const auto L = frame.aod.size();
  const int state_dim = static_cast<int>(2 * L);

  Eigen::VectorXd psi(state_dim);
  for (std::size_t l = 0; l < L; ++l) {
    psi(static_cast<Eigen::Index>(l)) = frame.aod[l];
    psi(static_cast<Eigen::Index>(L + l)) = frame.aoa[l];
  }
  for (int i = 0; i < state_dim; ++i) psi(i) += rng.normal(0.0, init_noise_std);

  Acquisition acq;
  acq.state.psi = psi;
  acq.state.gains.assign(L, channel::PathGain{});
  acq.belief.mean = psi.replicate(ar_order, 1);
  acq.belief.cov = init_noise_std * init_noise_std *
                   Eigen::MatrixXd::Identity(state_dim * ar_order, state_dim * ar_order);
  return acq;
}

ChannelTracker::ChannelTracker(channel::ArrayConfig arrays, channel::Codebook cb,
                               ChannelProcessConfig process, ChangeTestConfig change,
                               double meas_noise_var, double init_noise_std,
                               bool detector_reacquire)
    : arrays_(arrays),
      cb_(std::move(cb)),
      process_(std::move(process)),
      change_(change),
      meas_noise_var_(meas_noise_var),
      init_noise_std_(init_noise_std),
      detector_reacquire_(detector_reacquire) {
  change_.validate();
  if (meas_noise_var_ < 0.0) throw std::invalid_argument("tracker: meas_noise_var must be >= 0");
}

int ChannelTracker::change_dof() const { return 2 * arrays_.n_rx * arrays_.n_tx; }

void ChannelTracker::acquire(const scene::SceneFrame& frame, const channel::Observation& obs,
                             RngStream& init_rng) {
  auto acq = reacquire(frame, init_noise_std_, init_rng, process_.ar_order);
  belief_ = std::move(acq.belief);
  const int L = static_cast<int>(frame.aod.size());
  const auto ge =
      estimate_gains(belief_.mean.head(2 * L), obs, cb_, arrays_,
                     static_cast<int>(gains_.size()) == L ? &gains_ : nullptr);
  gains_ = ge.gains;
  nis_window_.clear();
  initialized_ = true;
}

ChannelTracker::StepOutput ChannelTracker::step(const channel::Observation& obs,
                                                const scene::SceneFrame& frame,
                                                RngStream& init_rng, bool force_reacquire) {
  const int L = static_cast<int>(frame.aod.size());
  StepOutput out;
  out.threshold = change_threshold(change_dof() * change_.window, change_.p_fa);

  if (!initialized_) {
    acquire(frame, obs, init_rng);
    out.psi = belief_.mean.head(2 * L);
    out.angle_variance = belief_.cov.diagonal().head(2 * L);
    out.reacquired = true;
    return out;
  }

  const GaussianBelief prior = predict(belief_, process_);
  const auto ge = estimate_gains(prior.mean.head(2 * L), obs, cb_, arrays_, &gains_);
  const auto upd = update(prior, obs, ge.gains, cb_, meas_noise_var_);

  nis_window_.push_back(upd.nis);
  while (static_cast<int>(nis_window_.size()) > change_.window) nis_window_.pop_front();
  const double stat = std::accumulate(nis_window_.begin(), nis_window_.end(), 0.0);
  const auto test =
      change_test(stat, change_dof() * static_cast<int>(nis_window_.size()), change_);
  out.nis = upd.nis;
  out.threshold = test.threshold;
  out.triggered = test.triggered;

  if (force_reacquire || (detector_reacquire_ && test.triggered)) {
    acquire(frame, obs, init_rng);
    out.reacquired = true;
  } else {
    belief_ = upd.posterior;
    gains_ = ge.gains;
  }

  out.psi = belief_.mean.head(2 * L);
  out.angle_variance = belief_.cov.diagonal().head(2 * L);
  return out;
}

}  // namespace nlostrack::tracking
