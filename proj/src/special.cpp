#include "majsim/special.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "majsim/fairness_ao.hpp"
#include "majsim/rng.hpp"

namespace majsim {

namespace {

constexpr double kAlignedTol = 1e-12;  // pairs below this phase rate are aligned

RVec linspace_positions(const SystemConfig& config) {
  RVec x(config.N);
  if (config.N == 1) {
    x(0) = config.L / 2.0;
    return x;
  }
  for (int n = 0; n < config.N; ++n) x(n) = config.L * n / (config.N - 1);
  return x;
}

double pair_rate(const Topology& topo, const SystemConfig& config, int i, int j) {
  return 2.0 * M_PI / config.lambda *
         (std::sin(topo.phi[j]) - std::sin(topo.phi[i]));
}

double inv_sqrt_dd(const Topology& topo, const SystemConfig& config, int i, int j) {
  return 1.0 / std::sqrt(std::pow(topo.d_J[i], config.tau) *
                         std::pow(topo.d_J[j], config.tau));
}

// accumulate 2|r_k| * invsq * cos_lower(x_n; alpha, arg r_k) into the
// separable quadratic (monomial coefficients)
void add_pair_surrogate(SeparableQuadratic& quad, const RVec& x0, double amp,
                        double alpha, double beta) {
  for (Eigen::Index n = 0; n < x0.size(); ++n) {
    const double t0 = alpha * x0(n) - beta;
    const double s = std::sin(t0), c = std::cos(t0);
    quad.a2(n) += amp * (-0.5 * alpha * alpha);
    quad.a1(n) += amp * (-alpha * s + alpha * alpha * x0(n));
    quad.a0(n) += amp * (c + alpha * s * x0(n) -
                         0.5 * alpha * alpha * x0(n) * x0(n));
  }
}

}  // namespace

double eig2x2_closed(double a, double d1, double d2, double r_abs, int N,
                     double tau) {
  if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("eig2x2_closed: a outside [0,1]");
  const double d1t = std::pow(d1, tau), d2t = std::pow(d2, tau);
  if (r_abs > N / std::sqrt(d1t * d2t) * (1.0 + 1e-9))
    throw std::invalid_argument("eig2x2_closed: correlation exceeds its bound");
  const double f = a * N / d1t + (1.0 - a) * N / d2t;
  double disc = f * f - 4.0 * a * (1.0 - a) *
                            (static_cast<double>(N) * N / (d1t * d2t) - r_abs * r_abs);
  if (disc < -1e-12) throw std::invalid_argument("eig2x2_closed: negative discriminant");
  disc = std::max(disc, 0.0);
  return 0.5 * (f + std::sqrt(disc));
}

std::pair<RVec, SolveReport> maximize_pair_correlation(
    const SystemConfig& config, const Topology& topo, int i, int j,
    const RVec& x_init) {
  if (!positions_feasible(x_init, config))
    throw std::invalid_argument("maximize_pair_correlation: x_init infeasible");
  SolveReport report;
  report.converged = true;
  const double alpha = pair_rate(topo, config, i, j);
  const double invsq = inv_sqrt_dd(topo, config, i, j);
  const double scale = 1.0 / invsq;

  RVec x = x_init;
  double rho = std::abs(channel_correlation(topo, config, x, i, j)) * scale;
  report.objective_trace.push_back(rho);
  if (std::abs(alpha) < kAlignedTol) {
    // aligned users: every feasible x already attains the global maximum
    report.final_objective = rho;
    return {x, report};
  }

  // SCA steps keep |r| non-decreasing; iterate essentially to the fixed point
  // (tighter than eps_inner so lattice-alignment cases resolve fully)
  const double tol = std::min(config.eps_inner, 1e-12 * config.N);
  for (int it = 0; it < 20000; ++it) {
    const std::complex<double> r = channel_correlation(topo, config, x, i, j);
    if (std::abs(r) * scale < 1e-12 * config.N) {
      // dead-centered cancellation: nudge toward the interior and retry once
      RVec xc = linspace_positions(config);
      x = 0.999 * x + 0.001 * xc;
      continue;
    }
    SeparableQuadratic quad;
    quad.a2 = RVec::Zero(config.N);
    quad.a1 = RVec::Zero(config.N);
    quad.a0 = RVec::Zero(config.N);
    add_pair_surrogate(quad, x, 2.0 * std::abs(r) * invsq * scale, alpha,
                       std::arg(r));
    const auto step = solve_chain_quadratic(quad, x, config);
    x = step.x;
    const double rho_new =
        std::abs(channel_correlation(topo, config, x, i, j)) * scale;
    report.objective_trace.push_back(rho_new);
    ++report.iterations;
    if (std::abs(rho_new - rho) <= tol) {
      rho = rho_new;
      break;
    }
    rho = rho_new;
  }
  report.final_objective = rho;
  return {x, report};
}

namespace {

// The pair-correlation landscape is multimodal in x, so the maximizer is
// restarted from a small deterministic family of feasible inits (grid,
// packed ends, the alignment lattice when it fits, seeded draws) and the
// best local optimum kept.
RVec best_pair_correlation_positions(const SystemConfig& config,
                                     const Topology& topo, int i, int j) {
  std::vector<RVec> inits;
  inits.push_back(linspace_positions(config));
  {
    RVec left(config.N), right(config.N);
    for (int n = 0; n < config.N; ++n) {
      left(n) = n * config.d_min;
      right(n) = config.L - (config.N - 1 - n) * config.d_min;
    }
    inits.push_back(left);
    inits.push_back(right);
  }
  const double alpha = pair_rate(topo, config, i, j);
  if (std::abs(alpha) > kAlignedTol) {
    const double p = 2.0 * M_PI / std::abs(alpha);  // alignment period
    const double s = p * std::ceil(config.d_min / p);
    if ((config.N - 1) * s <= config.L) {
      RVec lat(config.N);
      for (int n = 0; n < config.N; ++n) lat(n) = n * s;
      inits.push_back(lat);
    }
  }
  {
    Xoshiro256pp rng(config.seed);
    auto stream = rng.fork(0x50414952);  // pair-search stream
    for (int t = 0; t < 8; ++t) {
      const double free_span = config.L - (config.N - 1) * config.d_min;
      std::vector<double> u(config.N);
      for (auto& v : u) v = stream.uniform(0.0, free_span);
      std::sort(u.begin(), u.end());
      RVec x(config.N);
      for (int n = 0; n < config.N; ++n) x(n) = u[n] + n * config.d_min;
      inits.push_back(x);
    }
  }

  RVec best;
  double best_rho = -1.0;
  for (const auto& x0 : inits) {
    auto [x, rep] = maximize_pair_correlation(config, topo, i, j, x0);
    const double rho = std::abs(channel_correlation(topo, config, x, i, j));
    if (rho > best_rho) {
      best_rho = rho;
      best = x;
    }
  }
  return best;
}

}  // namespace

K2Result k2_sumrate_procedure(const SystemConfig& config, const Topology& topo,
                              double grid_eps) {
  if (config.K != 2) throw std::invalid_argument("k2_sumrate_procedure: K must be 2");
  if (!(grid_eps > 0.0 && grid_eps <= 1.0))
    throw std::invalid_argument("k2_sumrate_procedure: bad grid_eps");

  K2Result out;
  const RVec xs = best_pair_correlation_positions(config, topo, 0, 1);
  out.x_star = xs;
  const RVec gains = zf_gains(topo, config);
  const CVec g1 = jammer_channel(topo, config, xs, 0);
  const CVec g2 = jammer_channel(topo, config, xs, 1);

  const int steps = std::max(1, static_cast<int>(std::lround(1.0 / grid_eps)));
  double best_rate = std::numeric_limits<double>::infinity();
  for (int t = 0; t <= steps; ++t) {
    const double a = static_cast<double>(t) / steps;
    CMat G2(config.N, 2);
    G2.col(0) = std::sqrt(a) * g1;
    G2.col(1) = std::sqrt(1.0 - a) * g2;
    Eigen::SelfAdjointEigenSolver<CMat> es(G2.adjoint() * G2);
    CVec w = G2 * es.eigenvectors().col(1);
    const double nw = w.norm();
    if (nw > 1e-300) w /= nw;
    else { w = g1 / g1.norm(); }
    const auto resp =
        evaluate_with_gains(config, topo, gains, w, xs, Objective::Sum);
    out.rate_curve.push_back({a, resp.sum_rate});
    if (resp.sum_rate < best_rate) {  // strict: ties keep the smaller a
      best_rate = resp.sum_rate;
      out.a_star = a;
      out.w_star = w;
    }
  }
  out.rate = best_rate;
  return out;
}

K2FairnessResult k2_fairness(const SystemConfig& config, const Topology& topo) {
  if (config.K != 2) throw std::invalid_argument("k2_fairness: K must be 2");
  K2FairnessResult out;
  const RVec xs = best_pair_correlation_positions(config, topo, 0, 1);
  out.x = xs;
  auto [w, xi] = optimal_wj_given_x(xs, topo, config);
  out.w_J = w;
  out.rate = evaluate_jammer_action(config, topo, w, xs, Objective::Min).min_rate;
  return out;
}

namespace {

// max_x min_p Q_p(x) over the position chain, Q_p separable concave: epigraph
// variable t solved with the barrier method. Falls back to the anchor.
RVec maximize_min_of_quadratics(const std::vector<SeparableQuadratic>& quads,
                                const RVec& anchor, const SystemConfig& config) {
  const int N = config.N;
  const int dim = N + 1;
  const int it_idx = N;
  const double free_span = config.L - (N - 1) * config.d_min;
  if (free_span < 1e-12) return anchor;

  detail::BarrierProblem prob;
  prob.dim = dim;
  prob.objective.eval = [=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) {
      g->setZero();
      (*g)(it_idx) = -1.0;
    }
    return -z(it_idx);
  };
  for (const auto& q : quads) {
    prob.ineq.push_back({[&q, N, it_idx](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      double val = 0.0;
      for (int n = 0; n < N; ++n) {
        const double xn = z(n);
        val += (q.a2(n) * xn + q.a1(n)) * xn + q.a0(n);
        if (g) (*g)(n) -= 2.0 * q.a2(n) * xn + q.a1(n);
        if (h) (*h)(n, n) -= 2.0 * q.a2(n);
      }
      if (g) (*g)(it_idx) += 1.0;
      return z(it_idx) - val;
    }});
  }
  for (int n = 1; n < N; ++n) {
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) {
        (*g)(n) -= 1.0;
        (*g)(n - 1) += 1.0;
      }
      return config.d_min - (z(n) - z(n - 1));
    }});
  }
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(0) -= 1.0;
    return -z(0);
  }});
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(N - 1) += 1.0;
    return z(N - 1) - config.L;
  }});

  RVec z0(dim);
  {
    RVec xc(N);
    const double margin = free_span / 4.0;
    const double spacing =
        config.d_min + free_span / (2.0 * (N > 1 ? N - 1 : 1));
    for (int n = 0; n < N; ++n) xc(n) = margin + spacing * n;
    if (N == 1) xc(0) = config.L / 2.0;
    RVec x0 = anchor;
    double nu = 0.0;
    for (int tries = 0; tries < 12; ++tries) {
      x0 = (1.0 - nu) * anchor + nu * xc;
      double worst = std::min(x0(0), config.L - x0(N - 1));
      for (int n = 1; n < N; ++n)
        worst = std::min(worst, x0(n) - x0(n - 1) - config.d_min);
      if (worst > 1e-10) break;
      nu = (nu == 0.0) ? 1e-7 : nu * 10.0;
    }
    z0.head(N) = x0;
    double mn = std::numeric_limits<double>::infinity();
    for (const auto& q : quads) mn = std::min(mn, q.value(x0));
    z0(it_idx) = mn - std::max(1.0, std::abs(mn));
  }

  try {
    auto res = detail::solve_barrier(prob, z0, config.solver);
    if (res.z.allFinite()) return res.z.head(N);
  } catch (const std::exception&) {
    // fall through to the anchor
  }
  return anchor;
}

}  // namespace

std::pair<RVec, SolveReport> heuristic_positions(const SystemConfig& config,
                                                 const Topology& topo,
                                                 HeuristicRule rule,
                                                 const RVec& x_init) {
  if (!positions_feasible(x_init, config))
    throw std::invalid_argument("heuristic_positions: x_init infeasible");

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < config.K; ++i)
    for (int j = i + 1; j < config.K; ++j)
      if (std::abs(pair_rate(topo, config, i, j)) >= kAlignedTol)
        pairs.push_back({i, j});

  SolveReport report;
  report.converged = true;
  if (pairs.empty()) {
    report.final_objective = 0.0;
    return {x_init, report};
  }
  if (pairs.size() == 1)
    return maximize_pair_correlation(config, topo, pairs[0].first,
                                     pairs[0].second, x_init);

  // raw squared correlations, lifted by one common factor so the epigraph
  // solver sees O(1) numbers (a common positive scale preserves both rules)
  double kappa = 0.0;
  for (auto [i, j] : pairs)
    kappa = std::max(kappa, inv_sqrt_dd(topo, config, i, j));
  kappa = 1.0 / (kappa * kappa);

  auto corr2 = [&](const RVec& x, int i, int j) {
    const double v = std::abs(channel_correlation(topo, config, x, i, j));
    return kappa * v * v;
  };
  auto objective = [&](const RVec& x) {
    double sum = 0.0, mn = std::numeric_limits<double>::infinity();
    for (auto [i, j] : pairs) {
      const double v = corr2(x, i, j);
      sum += v;
      mn = std::min(mn, v);
    }
    return rule == HeuristicRule::MaxSumPair ? sum : mn;
  };

  RVec x = x_init;
  double obj = objective(x);
  report.objective_trace.push_back(obj);

  for (int it = 0; it < 5000; ++it) {
    std::vector<SeparableQuadratic> quads(pairs.size());
    for (size_t p = 0; p < pairs.size(); ++p) {
      auto [i, j] = pairs[p];
      quads[p].a2 = RVec::Zero(config.N);
      quads[p].a1 = RVec::Zero(config.N);
      quads[p].a0 = RVec::Zero(config.N);
      const std::complex<double> r = channel_correlation(topo, config, x, i, j);
      const double rabs = std::abs(r);
      quads[p].a0.array() -= kappa * rabs * rabs / config.N;  // -kappa |r_k|^2
      if (rabs > 0.0) {
        add_pair_surrogate(quads[p], x,
                           2.0 * kappa * rabs * inv_sqrt_dd(topo, config, i, j),
                           pair_rate(topo, config, i, j), std::arg(r));
      }
    }

    RVec x_new;
    if (rule == HeuristicRule::MaxSumPair) {
      SeparableQuadratic total;
      total.a2 = RVec::Zero(config.N);
      total.a1 = RVec::Zero(config.N);
      total.a0 = RVec::Zero(config.N);
      for (const auto& q : quads) {
        total.a2 += q.a2;
        total.a1 += q.a1;
        total.a0 += q.a0;
      }
      x_new = solve_chain_quadratic(total, x, config).x;
    } else {
      x_new = maximize_min_of_quadratics(quads, x, config);
    }
    const double obj_new = objective(x_new);
    ++report.iterations;
    if (obj_new < obj - 1e-12 * (1.0 + std::abs(obj))) break;
    x = x_new;
    report.objective_trace.push_back(obj_new);
    if (std::abs(obj_new - obj) <= 1e-11 * (1.0 + std::abs(obj))) {
      obj = obj_new;
      break;
    }
    obj = obj_new;
  }
  report.final_objective = obj;
  return {x, report};
}

IdealPositions ideal_positions(const Topology& topo, const SystemConfig& config,
                               int decimals) {
  if (decimals < 0 || decimals > 9)
    throw std::invalid_argument("ideal_positions: decimals out of range");
  IdealPositions out;

  std::vector<double> periods;
  for (int i = 0; i < config.K; ++i) {
    for (int j = i + 1; j < config.K; ++j) {
      const double dsin = std::abs(std::sin(topo.phi[i]) - std::sin(topo.phi[j]));
      if (dsin < kAlignedTol) continue;  // already aligned, no condition
      periods.push_back(config.lambda / dsin);
    }
  }

  if (periods.empty()) {
    out.x_star = linspace_positions(config);
    out.x_star.array() -= out.x_star(0);  // progression convention x_1 = 0
    out.achieved = check_full_correlation(out.x_star, topo, config, 1e-9);
    out.span = out.x_star(config.N - 1) - out.x_star(0);
    return out;
  }

  const double scale = std::pow(10.0, decimals);
  unsigned __int128 lcm = 1;
  for (double p : periods) {
    const double scaled = std::round(p * scale);
    if (!(scaled >= 1.0)) throw std::invalid_argument("ideal_positions: period rounds to zero");
    if (scaled > 9e18) throw std::overflow_error("ideal_positions: period too large");
    const auto v = static_cast<unsigned long long>(scaled);
    const unsigned __int128 g = std::gcd(static_cast<unsigned long long>(lcm % v), v);
    const unsigned __int128 next = lcm / g * v;
    if (next / v != lcm / g) throw std::overflow_error("ideal_positions: LCM overflow");
    lcm = next;
    if (lcm > (static_cast<unsigned __int128>(1) << 100))
      throw std::overflow_error("ideal_positions: LCM overflow");
  }
  const double x2 = static_cast<double>(static_cast<unsigned long long>(lcm)) / scale;

  out.x_star.resize(config.N);
  for (int n = 0; n < config.N; ++n) out.x_star(n) = n * x2;
  out.achieved = check_full_correlation(out.x_star, topo, config, 1e-9);
  out.span = out.x_star(config.N - 1) - out.x_star(0);
  return out;
}

bool check_full_correlation(const RVec& x, const Topology& topo,
                            const SystemConfig& config, double tol) {
  const int N = static_cast<int>(x.size());
  for (int i = 0; i < config.K; ++i) {
    for (int j = i + 1; j < config.K; ++j) {
      const double rate = pair_rate(topo, config, i, j);
      std::complex<double> acc{0.0, 0.0};
      for (int n = 0; n < N; ++n)
        acc += std::exp(std::complex<double>(0.0, rate * x(n)));
      if (std::abs(acc) / N < 1.0 - tol) return false;
    }
  }
  return true;
}

namespace {

LinkState ideal_link(const SystemConfig& config, const Topology& topo) {
  LinkState link;
  link.gain = zf_gains(topo, config);
  link.interference.resize(config.K);
  const double qj = config.q_j_mw();
  for (int i = 0; i < config.K; ++i)
    link.interference(i) =
        qj * config.N / std::pow(topo.d_J[i], config.tau) + config.sigma2_mw;
  return link;
}

}  // namespace

double lb_sumrate(const SystemConfig& config, const Topology& topo) {
  return waterfill(ideal_link(config, topo), config.p_sum_mw()).sum_rate;
}

double lb_minrate(const SystemConfig& config, const Topology& topo) {
  return equal_sinr_alloc(ideal_link(config, topo), config.p_sum_mw()).min_rate;
}

}  // namespace majsim
