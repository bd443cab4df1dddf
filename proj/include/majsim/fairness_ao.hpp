#pragma once

#include "majsim/st_response.hpp"
#include "majsim/subsolver.hpp"

namespace majsim {

/// Iterate of the fairness (min-rate) alternating optimization.
struct FairnessState {
  RVec x;
  CVec y;  // unit-norm K-vector
  std::vector<double> trace;  // y^H G^H G y after every update
};

/// K x K hermitian matrix with entry (i,j) = sqrt(w_i w_j) g_i^H(x) g_j(x).
CMat build_weighted_gram(const RVec& x, const Topology& topo,
                         const SystemConfig& config, const RVec& weights);

/// Fairness weights D_{1,j} = Q_J / |w_{j,ZF}^H h_j|^2.
RVec fairness_weights(const SystemConfig& config, const RVec& gains);

/// Closed-form optimal jamming beamformer at fixed positions: the principal
/// eigenvector of G(x) G^H(x) (phase fixed so the largest-modulus entry is
/// real positive), together with the principal eigenvalue.
std::pair<CVec, double> optimal_wj_given_x(const RVec& x, const Topology& topo,
                                           const SystemConfig& config);

/// One closed-form y update (normalized power iteration on G^H G).
CVec update_y(const RVec& x, const CVec& y_prev, const Topology& topo,
              const SystemConfig& config);

/// One SCA position update maximizing the separable quadratic minorant of
/// y^H G^H(x) G(x) y; the true objective never decreases.
RVec update_x_fairness(const RVec& x_prev, const CVec& y, const Topology& topo,
                       const SystemConfig& config);

struct FairnessAoResult {
  RVec x;
  CVec w_J;
  SolveReport report;
  StResponse response;
  FairnessState state;
};

/// Fairness alternating optimization: alternate y updates (power iteration)
/// and position updates (SCA)
/// until the block objectives agree within eps_outer, then recover w_J.
/// x_init overrides the default uniform-grid starting positions (used to
/// warm-start from correlation heuristics).
FairnessAoResult run_fairness_ao(const SystemConfig& config,
                                const RVec* x_init = nullptr);

/// Fairness objective y^H G^H(x) G(x) y (milliwatt-scaled).
double fairness_objective(const RVec& x, const CVec& y, const Topology& topo,
                          const SystemConfig& config, const RVec& weights);

}  // namespace majsim
