#include "nlostrack/channel.hpp"

#include <cmath>
#include <stdexcept>

namespace nlostrack::channel {

namespace {

Eigen::VectorXcd steering(double angle, int n) {
  if (n < 1) throw std::invalid_argument("steering: antenna count must be >= 1");
  Eigen::VectorXcd a(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double c = std::cos(angle);
  for (int k = 0; k < n; ++k) {
    const double phase = -kPi * static_cast<double>(k) * c;
    a(k) = std::polar(scale, phase);
  }
  return a;
}

}  // namespace

void ArrayConfig::validate() const {
  if (n_tx < 1 || n_rx < 1) throw std::invalid_argument("arrays: antenna counts must be >= 1");
  if (!(carrier_freq > 0.0)) throw std::invalid_argument("arrays: carrier_freq must be > 0");
}

AngleState make_angle_state(const scene::SceneFrame& frame, std::vector<PathGain> gains) {
  const auto L = frame.aod.size();
  if (gains.size() != L) throw std::invalid_argument("make_angle_state: gain count mismatch");
  AngleState s;
  s.psi.resize(static_cast<Eigen::Index>(2 * L));
  for (std::size_t l = 0; l < L; ++l) {
    s.psi(static_cast<Eigen::Index>(l)) = frame.aod[l];
    s.psi(static_cast<Eigen::Index>(L + l)) = frame.aoa[l];
  }
  s.gains = std::move(gains);
  return s;
}

Eigen::VectorXcd steering_tx(double phi, int n) { return steering(phi, n); }

Eigen::VectorXcd steering_rx(double theta, int n) { return steering(theta, n); }

Eigen::VectorXcd steering_derivative(double angle, int n) {
  if (n < 1) throw std::invalid_argument("steering_derivative: antenna count must be >= 1");
  Eigen::VectorXcd d(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  for (int k = 0; k < n; ++k) {
    const double kk = static_cast<double>(k);
    const std::complex<double> base = std::polar(scale, -kPi * kk * c);
    d(k) = std::complex<double>(0.0, kPi * kk * s) * base;
  }
  return d;
}

Eigen::MatrixXcd build_channel(const AngleState& state, const ArrayConfig& arrays) {
  arrays.validate();
  const int L = state.num_paths();
  if (L < 1) throw std::invalid_argument("build_channel: at least one path required");
  if (state.psi.size() != 2 * L) throw std::invalid_argument("build_channel: psi length != 2L");
  Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(arrays.n_rx, arrays.n_tx);
  for (int l = 0; l < L; ++l) {
    const Eigen::VectorXcd ar = steering_rx(state.aoa(l), arrays.n_rx);
    const Eigen::VectorXcd at = steering_tx(state.aod(l), arrays.n_tx);
    H.noalias() += state.gains[static_cast<std::size_t>(l)].alpha * ar * at.adjoint();
  }
  return H;
}

Codebook make_codebook(const ArrayConfig& arrays, CodebookKind kind) {
  arrays.validate();
  Codebook cb;
  auto make_grid = [&](int n) {
    Eigen::VectorXd grid(n);
    for (int i = 0; i < n; ++i) {
      if (kind == CodebookKind::dft) {
        const double cosv = -1.0 + 2.0 * static_cast<double>(i + 1) / static_cast<double>(n);
        grid(i) = std::acos(cosv);
      } else {
        grid(i) = kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
      }
    }
    return grid;
  };
  cb.grid_tx = make_grid(arrays.n_tx);
  cb.grid_rx = make_grid(arrays.n_rx);
  cb.tx_beams.resize(arrays.n_tx, arrays.n_tx);
  for (int i = 0; i < arrays.n_tx; ++i) cb.tx_beams.col(i) = steering_tx(cb.grid_tx(i), arrays.n_tx);
  cb.rx_beams.resize(arrays.n_rx, arrays.n_rx);
  for (int i = 0; i < arrays.n_rx; ++i) cb.rx_beams.col(i) = steering_rx(cb.grid_rx(i), arrays.n_rx);
  return cb;
}

Observation observe(const AngleState& state, const Codebook& cb, double noise_var,
                    RngStream& rng, int t) {
  if (noise_var < 0.0) throw std::invalid_argument("observe: noise variance must be >= 0");
  ArrayConfig arrays;
  arrays.n_rx = static_cast<int>(cb.rx_beams.rows());
  arrays.n_tx = static_cast<int>(cb.tx_beams.rows());
  Observation obs;
  obs.t = t;
  obs.beam_matrix = cb.rx_beams.adjoint() * build_channel(state, arrays) * cb.tx_beams;
  if (noise_var > 0.0) {
    for (Eigen::Index j = 0; j < obs.beam_matrix.cols(); ++j)
      for (Eigen::Index i = 0; i < obs.beam_matrix.rows(); ++i)
        obs.beam_matrix(i, j) += rng.cnormal(noise_var);
  }
  return obs;
}

double noise_variance_from_snr(double snr_linear, const ArrayConfig& arrays) {
  arrays.validate();
  if (!(snr_linear > 0.0)) throw std::invalid_argument("noise_variance_from_snr: SNR must be > 0");
  return static_cast<double>(arrays.n_rx) * static_cast<double>(arrays.n_tx) / snr_linear;
}

std::vector<PathGain> synthesize_gains(const scene::SceneFrame& frame, const ArrayConfig& arrays,
                                       GainModel model) {
  arrays.validate();
  const double lambda = arrays.wavelength();
  const double array_gain = std::sqrt(static_cast<double>(arrays.n_tx * arrays.n_rx));
  const std::size_t L = frame.path_len.size();
  if (L == 0) throw std::invalid_argument("synthesize_gains: frame has no paths");

  std::vector<double> rho(L, 0.0);
  switch (model) {
    case GainModel::unit_rho:
      for (auto& r : rho) r = 1.0 / array_gain;
      break;
    case GainModel::unit_attenuation:
      for (auto& r : rho) r = 1.0;
      break;
    case GainModel::inverse_range: {
      double sum_w2 = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        if (!(frame.path_len[l] > 0.0))
          throw std::invalid_argument("synthesize_gains: path length must be > 0");
        sum_w2 += 1.0 / (frame.path_len[l] * frame.path_len[l]);
      }
      const double scale =
          std::sqrt(static_cast<double>(L) / (array_gain * array_gain * sum_w2));
      for (std::size_t l = 0; l < L; ++l) rho[l] = scale / frame.path_len[l];
      break;
    }
  }

  std::vector<PathGain> gains(L);
  for (std::size_t l = 0; l < L; ++l) {
    const double R = frame.path_len[l];
    if (!(R > 0.0)) throw std::invalid_argument("synthesize_gains: path length must be > 0");
    gains[l].rho = rho[l];
    gains[l].delta = R;
    gains[l].alpha = std::polar(rho[l] * array_gain, -2.0 * kPi * R / lambda);
  }
  return gains;
}

}  // namespace nlostrack::channel
