#pragma once

#include "majsim/st_response.hpp"
#include "majsim/subsolver.hpp"

namespace majsim {

/// Iterate of the sum-rate alternating optimization.
struct SumRateState {
  double eta = 0.0;
  CVec w_J;
  RVec x;
  RVec psi;
  std::vector<std::vector<double>> inner_traces;  // one per inner loop
  std::vector<double> outer_trace;                // relaxed objective, bits/s/Hz
};

/// Section III.D initialization: uniform grid positions, channel-sum
/// beamformer, eta = 5, Psi_i = 100.
SumRateState init_sumrate(const SystemConfig& config, const Topology& topo);

/// Replaces (eta, psi) by a point satisfying the smoothed budget rows for
/// the current link state when they do not already (the stock empirical
/// anchors can be infeasible at milliwatt scale). Exact water-filling level
/// plus matched slacks.
void repair_anchor(const SystemConfig& config, const RVec& gains,
                   const RVec& interference, double& eta, RVec& psi);

struct SumRateAoResult {
  CVec w_J;
  RVec x;
  SolveReport report;
  StResponse response;  // ground-truth ST reaction at the final action
  SumRateState state;
};

/// Sum-rate alternating optimization: iterate the beamformer block and the
/// position block inner SCA loops until the two block objectives agree
/// within eps_outer.
SumRateAoResult run_sumrate_ao(const SystemConfig& config);

/// The beam-block inner loop alone at fixed positions (used by the RAP / FPA / AS /
/// RULA benchmarks for the sum objective). g_cols are the jammer channels at
/// the fixed positions.
struct BeamformingResult {
  double eta = 0.0;
  CVec w;
  RVec psi;
  SolveReport report;
};
BeamformingResult optimize_sum_beamforming(const SystemConfig& config,
                                           const RVec& gains,
                                           const CMat& g_cols);

}  // namespace majsim
