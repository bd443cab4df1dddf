#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace majsim {

struct SolverSettings {
  double kkt_tol = 1e-6;   // stationarity residual tolerance
  double feas_tol = 1e-8;  // constraint violation tolerance
  int max_iters = 5000;
};

/// All scenario parameters. Powers are stored in dBm and converted to linear
/// milliwatts (10^(dBm/10)) wherever rate formulas consume them.
struct SystemConfig {
  int M = 5;  // transmit antennas at the suspicious transmitter
  int K = 4;  // suspicious receivers
  int N = 5;  // movable antennas at the jammer

  double r = 1000.0;    // ST -> receiver column distance [m]
  double r_d = 1000.0;  // receiver column -> jammer distance [m]

  // AoAs theta_i in (-pi/2, pi/2); empty = K evenly spaced in [-pi/3, pi/3]
  std::vector<double> theta;

  double tau = 3.0;     // path loss exponent
  double lambda = 1.0;  // wavelength (normalized length unit)
  double d_min = 0.5;   // minimum adjacent spacing of movable antennas
  double L = 2.3;       // total movable-antenna span

  double P_sum_dbm = 10.0;
  double Q_J_dbm = 10.0;
  double sigma2_mw = 1e-9;

  double chi = 5.0;  // log-sum-exp sharpness

  double eps_outer = 1e-3;  // AO termination tolerance [bits/s/Hz]
  double eps_inner = 1e-4;  // SCA inner-loop tolerance
  int max_outer = 50;
  int max_inner = 100;

  std::uint64_t seed = 0;

  // benchmark scheme knobs (reducible for quick tests)
  int rap_draws = 100;
  int fbeap_draws = 10000;
  int rula_angles = 50;
  double k2_grid_eps = 0.01;  // a-search accuracy for the K=2 procedure

  SolverSettings solver;

  double p_sum_mw() const;
  double q_j_mw() const;

  /// Returns theta, substituting the evenly-spaced default when unset.
  std::vector<double> resolved_theta() const;

  /// Throws std::invalid_argument when any invariant is violated.
  void validate() const;
};

double dbm_to_mw(double dbm);

/// Jammer-side geometry derived from the 2-D topology: the ST at the origin,
/// receiver i at (r, r*tan(theta_i)), the jammer at (r + r_d, 0).
struct Topology {
  std::vector<double> d_S;  // ST -> receiver distances
  std::vector<double> d_J;  // jammer -> receiver distances
  std::vector<double> phi;  // jammer-side AoAs
};

Topology derive_topology(const SystemConfig& config);

/// Parses a flat `key = value` file ('#' comments). Unknown keys are rejected.
SystemConfig load_config(const std::string& path);
SystemConfig parse_config(const std::string& text);

}  // namespace majsim
