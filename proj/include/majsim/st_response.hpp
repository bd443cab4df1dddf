#pragma once

#include <optional>
#include <utility>

#include "majsim/model.hpp"

namespace majsim {

/// Per-user link coefficients seen by the ST's power allocator:
/// gain_i = |w_{i,ZF}^H h_i|^2, interference_i = Q_J*|w_J^H g_i(x)|^2 + sigma^2.
struct LinkState {
  RVec gain;          // dimensionless
  RVec interference;  // milliwatts
};

/// The ST's optimal reaction to a fixed jammer action.
struct StResponse {
  RVec powers;                // milliwatts, sums to P_sum
  std::optional<double> eta;  // water-filling level (absent for equal-SINR)
  RVec sinrs;
  double sum_rate = 0.0;  // bits/s/Hz
  double min_rate = 0.0;  // bits/s/Hz
};

enum class Objective { Sum, Min };

/// Sum-rate-optimal water-filling: P_i = max(eta - c_i, 0) with
/// c_i = interference_i / gain_i and the level chosen so the budget is met
/// exactly (sort-and-solve, deterministic).
StResponse waterfill(const LinkState& link, double P_sum);

/// Max-min-optimal allocation equalizing all SINRs at
/// gamma = P_sum / sum_j(interference_j / gain_j).
StResponse equal_sinr_alloc(const LinkState& link, double P_sum);

/// (sum_rate, min_rate) for an arbitrary allocation on the given link.
std::pair<double, double> rates(const LinkState& link, const RVec& powers);

LinkState make_link_state(const SystemConfig& config, const Topology& topo,
                          const CVec& w_J, const RVec& x);

/// Ground-truth scoring of a jammer action: builds the link state, applies
/// the ST's optimal response for the objective, and returns the result.
/// Every rate this library reports comes through here; optimizer-internal
/// relaxations never leak into reported numbers.
StResponse evaluate_jammer_action(const SystemConfig& config,
                                  const Topology& topo, const CVec& w_J,
                                  const RVec& x, Objective objective);

/// Variant with precomputed ZF gains (the gains do not depend on w_J or x).
StResponse evaluate_with_gains(const SystemConfig& config, const Topology& topo,
                               const RVec& gains, const CVec& w_J,
                               const RVec& x, Objective objective);

}  // namespace majsim
