#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "nlostrack/geometry.hpp"
#include "nlostrack/rng.hpp"
#include "nlostrack/scene.hpp"

namespace nlostrack::channel {

struct ArrayConfig {
  int n_tx = 64;
  int n_rx = 8;
  double carrier_freq = 40e9;  // Hz

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  void validate() const;
};

struct PathGain {
  std::complex<double> alpha{0.0, 0.0};  // path gain
  double rho = 0.0;                      // attenuation
  double delta = 0.0;                    // m, first-antenna path distance
};

// How the path attenuation rho_l is chosen when synthesizing gains:
//   unit_rho:         rho_l = 1/sqrt(Nt*Nr), so |alpha_l| = 1
//   inverse_range:    rho_l proportional to 1/R_l, scaled so sum |alpha|^2 = L
//   unit_attenuation: rho_l = 1, so |alpha_l| = sqrt(Nt*Nr); with
//                     sigma_w^2 = Nr*Nt/SNR this makes the per-beam peak
//                     SNR equal to the configured SNR
enum class GainModel { unit_rho, inverse_range, unit_attenuation };

// State vector psi = [phi_1..phi_L, theta_1..theta_L] plus per-path gains.
struct AngleState {
  Eigen::VectorXd psi;
  std::vector<PathGain> gains;

  int num_paths() const { return static_cast<int>(gains.size()); }
  double aod(int l) const { return psi(l); }
  double aoa(int l) const { return psi(num_paths() + l); }
};

AngleState make_angle_state(const scene::SceneFrame& frame, std::vector<PathGain> gains);

/// Transmit steering vector, entry k = (1/sqrt(n)) exp(-j pi k cos phi).
Eigen::VectorXcd steering_tx(double phi, int n);
/// Receive steering vector, same structure.
Eigen::VectorXcd steering_rx(double theta, int n);
/// d a(angle)/d angle, entry k = (1/sqrt(n)) (j pi k sin angle) exp(-j pi k cos angle).
Eigen::VectorXcd steering_derivative(double angle, int n);

/// H = sum_l alpha_l a_r(theta_l) a_t(phi_l)^H, an N_r x N_t matrix.
Eigen::MatrixXcd build_channel(const AngleState& state, const ArrayConfig& arrays);

enum class CodebookKind { dft, uniform_angle };

struct Codebook {
  Eigen::MatrixXcd tx_beams;  // B, n_tx x n_tx, columns are steering vectors
  Eigen::MatrixXcd rx_beams;  // C, n_rx x n_rx
  Eigen::VectorXd grid_tx;    // rad
  Eigen::VectorXd grid_rx;    // rad
};

// dft: grid cosines uniformly spaced with step 2/N over (-1, 1], which makes
// B and C unitary and keeps the combined noise white.
// uniform_angle: midpoint grid over (0, pi).
Codebook make_codebook(const ArrayConfig& arrays, CodebookKind kind);

struct Observation {
  Eigen::MatrixXcd beam_matrix;  // Y = C^H H B + V, N_r x N_t
  int t = 0;

  /// Column-major vec(Y).
  Eigen::VectorXcd vectorized() const {
    return Eigen::Map<const Eigen::VectorXcd>(beam_matrix.data(), beam_matrix.size());
  }
};

/// Beam sweep with i.i.d. circular complex Gaussian noise of variance
/// noise_var per entry; noise_var = 0 gives the noiseless response.
Observation observe(const AngleState& state, const Codebook& cb, double noise_var,
                    RngStream& rng, int t = 0);

/// sigma_w^2 = N_r * N_t / SNR.
double noise_variance_from_snr(double snr_linear, const ArrayConfig& arrays);

/// Gains with delta_l = R_l and phase exp(-j 2 pi R_l / lambda_c).
std::vector<PathGain> synthesize_gains(const scene::SceneFrame& frame, const ArrayConfig& arrays,
                                       GainModel model);

}  // namespace nlostrack::channel
