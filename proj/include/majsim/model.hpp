#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "majsim/config.hpp"

namespace majsim {

using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Half-wavelength ULA steering channel from the ST to receiver i (0-based).
/// Entry m: exp(j*pi*m*sin(theta_i)) / sqrt(d_S^tau) for lambda-spaced d=lambda/2.
CVec st_channel(const Topology& topo, const SystemConfig& config, int i);

/// Movable-array channel from the jammer to receiver i at positions x.
/// Entry n: exp(j*(2*pi/lambda)*x_n*sin(phi_i)) / sqrt(d_J^tau).
CVec jammer_channel(const Topology& topo, const SystemConfig& config,
                    const RVec& x, int i);

/// Stacked jammer channels as the N x K matrix [g_1(x), ..., g_K(x)].
CMat jammer_channel_matrix(const Topology& topo, const SystemConfig& config,
                           const RVec& x);

/// Zero-forcing transmit beamformers: w_i is the unit-norm projection of h_i
/// onto the orthogonal complement of the other users' channels.
/// Throws when user channels are (numerically) linearly dependent; the
/// message names the colliding user indices.
std::vector<CVec> zf_beamformers(const std::vector<CVec>& h);

/// Per-user ZF link gains |w_i^H h_i|^2.
RVec zf_gains(const Topology& topo, const SystemConfig& config);

/// g_i^H(x) g_j(x)
std::complex<double> channel_correlation(const Topology& topo,
                                         const SystemConfig& config,
                                         const RVec& x, int i, int j);

/// Exact feasibility test for constraints (adjacent spacing >= d_min and
/// x_1 >= 0, x_N <= L). kSpacingSlack absorbs accumulated rounding from
/// position constructors; it sits far below every tested boundary scale.
bool positions_feasible(const RVec& x, const SystemConfig& config);

inline constexpr double kSpacingSlack = 1e-12;

}  // namespace majsim
