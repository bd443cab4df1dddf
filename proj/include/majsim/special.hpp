#pragma once

#include "majsim/st_response.hpp"
#include "majsim/subsolver.hpp"

namespace majsim {

/// Output of the two-user sum-rate pipeline.
struct K2Result {
  RVec x_star;
  double a_star = 0.0;  // jamming weight in [0, 1]
  CVec w_star;
  double rate = 0.0;  // bits/s/Hz
  std::vector<std::pair<double, double>> rate_curve;  // (a, R_sum(a))
};

/// Ideal (bound-achieving) positions from the least-common-multiple rule.
struct IdealPositions {
  RVec x_star;           // arithmetic progression, x_1 = 0
  bool achieved = false; // all pairwise correlations at the global maximum
  double span = 0.0;
};

/// Principal eigenvalue of the weighted 2x2 Gram in closed form:
/// [f(a) + sqrt(f(a)^2 - 4a(1-a)(N^2/(d1^tau d2^tau) - r_abs^2))] / 2.
double eig2x2_closed(double a, double d1, double d2, double r_abs, int N,
                     double tau);

/// SCA maximization of |g_i^H(x) g_j(x)|^2 over feasible positions.
std::pair<RVec, SolveReport> maximize_pair_correlation(
    const SystemConfig& config, const Topology& topo, int i, int j,
    const RVec& x_init);

/// The four-step two-user sum-rate procedure: correlation-optimal positions,
/// then a grid search over the jamming weight a with true water-filling
/// scoring. Ties resolve to the smallest a.
K2Result k2_sumrate_procedure(const SystemConfig& config, const Topology& topo,
                              double grid_eps);

struct K2FairnessResult {
  RVec x;
  CVec w_J;
  double rate = 0.0;
};
K2FairnessResult k2_fairness(const SystemConfig& config, const Topology& topo);

enum class HeuristicRule { MaxMinPair, MaxSumPair };

/// Correlation-rule position heuristics for K > 2: maximize the smallest
/// (or the sum of) squared pairwise correlations via SCA.
std::pair<RVec, SolveReport> heuristic_positions(const SystemConfig& config,
                                                 const Topology& topo,
                                                 HeuristicRule rule,
                                                 const RVec& x_init);

/// LCM position construction; periods rounded to `decimals` places and the
/// LCM taken exactly over the scaled integers.
IdealPositions ideal_positions(const Topology& topo, const SystemConfig& config,
                               int decimals = 1);

/// True iff every pairwise correlation magnitude is within tol of its
/// geometric maximum.
bool check_full_correlation(const RVec& x, const Topology& topo,
                            const SystemConfig& config, double tol);

/// Performance lower bounds under ideal (fully correlated) jamming.
double lb_sumrate(const SystemConfig& config, const Topology& topo);
double lb_minrate(const SystemConfig& config, const Topology& topo);

}  // namespace majsim
