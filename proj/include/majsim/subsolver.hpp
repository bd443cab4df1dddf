#pragma once

#include <functional>
#include <vector>

#include "majsim/model.hpp"

namespace majsim {

struct SolveReport {
  std::vector<double> objective_trace;
  double final_objective = 0.0;
  int iterations = 0;
  double max_violation = 0.0;
  double wall_ms = 0.0;
  bool converged = true;
};

/// Anchor point for one SCA step of the sum-rate problem.
struct SumRateAnchor {
  double eta = 0.0;
  CVec w;    // jamming beamformer (w-block anchors)
  RVec x;    // antenna positions (x-block anchors)
  RVec psi;  // K slack variables
};

struct BeamBlockResult {
  double eta = 0.0;
  CVec w;
  RVec psi;
  SolveReport report;
};

/// One convex step of the (eta, w_J, Psi) block: minimizes the hinge
/// objective (epigraph slacks) subject to ||w_J|| <= 1 and the smoothed
/// budget rows, all linearized at the anchor. The returned objective never
/// exceeds the anchor objective. Throws when the anchor is infeasible.
BeamBlockResult solve_beam_block(const RVec& gains, const CMat& g_cols,
                                 const SumRateAnchor& anchor,
                                 const SystemConfig& config);

struct PositionBlockResult {
  double eta = 0.0;
  RVec x;
  RVec psi;
  SolveReport report;
};

/// One convex step of the (eta, x, Psi) block with w_J fixed; spacing and
/// span constraints are enforced exactly.
PositionBlockResult solve_position_block(const RVec& gains, const CVec& w_J,
                                         const Topology& topo,
                                         const SumRateAnchor& anchor,
                                         const SystemConfig& config);

/// Separable quadratic q_m(x) = a2[m] x^2 + a1[m] x + a0[m] with a2 <= 0.
struct SeparableQuadratic {
  RVec a2, a1, a0;
  double value(const RVec& x) const {
    return (a2.array() * x.array().square() + a1.array() * x.array() +
            a0.array())
        .sum();
  }
};

struct ChainQuadraticResult {
  RVec x;
  SolveReport report;
};

/// Exact maximizer of a separable concave quadratic over the chain
/// {x_m - x_{m-1} >= d_min, 0 <= x_1, x_N <= L}: after the substitution
/// u_m = x_m - (m-1) d_min this is box-constrained isotonic regression,
/// solved by pool-adjacent-violators with per-coordinate clipping.
/// Zero-curvature coordinates keep their anchor value (clamped to remain
/// feasible); `anchor` supplies those values.
ChainQuadraticResult solve_chain_quadratic(const SeparableQuadratic& quad,
                                           const RVec& anchor,
                                           const SystemConfig& config);

/// Relaxed sum-rate objective of the water-filling reformulation, evaluated
/// exactly: sum_i max(ln(eta*gain_i/interference_i), 0) / ln 2.
double relaxed_sum_rate(double eta, const RVec& gains, const RVec& interference);

namespace detail {

/// Smooth convex inequality-constrained program, minimize f0 s.t. f_i <= 0.
/// Callbacks return the value and optionally fill gradient / Hessian.
struct SmoothFn {
  std::function<double(const RVec& z, RVec* grad, Eigen::MatrixXd* hess)> eval;
};

struct BarrierProblem {
  int dim = 0;
  SmoothFn objective;
  std::vector<SmoothFn> ineq;
};

struct BarrierResult {
  RVec z;
  double objective = 0.0;
  int newton_iters = 0;
  bool converged = false;
};

/// Log-barrier interior-point method with damped Newton centering.
/// z0 must be strictly feasible. Deterministic.
BarrierResult solve_barrier(const BarrierProblem& prob, RVec z0,
                            const SolverSettings& settings);

}  // namespace detail

}  // namespace majsim
