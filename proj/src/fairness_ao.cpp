#include "majsim/fairness_ao.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>

namespace majsim {

CMat build_weighted_gram(const RVec& x, const Topology& topo,
                         const SystemConfig& config, const RVec& weights) {
  const int K = config.K;
  if (weights.size() != K) throw std::invalid_argument("build_weighted_gram: weights size");
  for (int i = 0; i < K; ++i)
    if (weights(i) < 0.0) throw std::invalid_argument("build_weighted_gram: negative weight");
  CMat G(x.size(), K);
  for (int i = 0; i < K; ++i)
    G.col(i) = std::sqrt(weights(i)) * jammer_channel(topo, config, x, i);
  return G.adjoint() * G;
}

RVec fairness_weights(const SystemConfig& config, const RVec& gains) {
  return config.q_j_mw() / gains.array();
}

namespace {

CMat weighted_channels(const RVec& x, const Topology& topo,
                       const SystemConfig& config, const RVec& weights) {
  CMat G(x.size(), config.K);
  for (int i = 0; i < config.K; ++i)
    G.col(i) = std::sqrt(weights(i)) * jammer_channel(topo, config, x, i);
  return G;
}

// phase convention: entry of largest modulus made real positive
void fix_phase(CVec& v) {
  Eigen::Index imax = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best) {
      best = a;
      imax = i;
    }
  }
  if (best > 0.0) v *= std::conj(v(imax)) / std::abs(v(imax));
}

}  // namespace

double fairness_objective(const RVec& x, const CVec& y, const Topology& topo,
                          const SystemConfig& config, const RVec& weights) {
  const CMat M = build_weighted_gram(x, topo, config, weights);
  return std::real(y.dot(M * y));
}

std::pair<CVec, double> optimal_wj_given_x(const RVec& x, const Topology& topo,
                                           const SystemConfig& config) {
  const RVec gains = zf_gains(topo, config);
  const RVec D = fairness_weights(config, gains);
  const CMat G = weighted_channels(x, topo, config, D);
  // eigendecompose the K x K Gram, then map back through G
  Eigen::SelfAdjointEigenSolver<CMat> es(G.adjoint() * G);
  const Eigen::Index top = es.eigenvalues().size() - 1;
  const double xi = es.eigenvalues()(top);
  CVec w = G * es.eigenvectors().col(top);
  const double nw = w.norm();
  if (nw > 1e-300) {
    w /= nw;
  } else {
    w = CVec::Zero(x.size());
    w(0) = 1.0;  // all weights zero: any unit beam attains the (zero) optimum
  }
  fix_phase(w);
  return {w, xi};
}

CVec update_y(const RVec& x, const CVec& y_prev, const Topology& topo,
              const SystemConfig& config) {
  const RVec gains = zf_gains(topo, config);
  const RVec D = fairness_weights(config, gains);
  const CMat M = build_weighted_gram(x, topo, config, D);
  const CVec b = M * y_prev;
  const double nb = b.norm();
  if (!(nb > 0.0)) return y_prev;
  return b / nb;
}

RVec update_x_fairness(const RVec& x_prev, const CVec& y, const Topology& topo,
                       const SystemConfig& config) {
  const int K = config.K;
  const int N = config.N;
  const RVec gains = zf_gains(topo, config);
  const RVec D = fairness_weights(config, gains);

  // separable quadratic minorant of y^H G^H G y around x_prev
  SeparableQuadratic quad;
  quad.a2 = RVec::Zero(N);
  quad.a1 = RVec::Zero(N);
  quad.a0 = RVec::Zero(N);
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      const std::complex<double> yy = std::conj(y(j)) * y(i);
      const double amp =
          std::sqrt(D(i) * D(j) /
                    (std::pow(topo.d_J[i], config.tau) *
                     std::pow(topo.d_J[j], config.tau))) *
          std::abs(yy);
      if (!(amp > 0.0)) continue;
      const double rate = 2.0 * M_PI / config.lambda *
                          (std::sin(topo.phi[i]) - std::sin(topo.phi[j]));
      const double phase = std::arg(yy);
      for (int n = 0; n < N; ++n) {
        // cos(rate*x + phase) expanded about x_prev with curvature rate^2
        const double t0 = rate * x_prev(n) + phase;
        const double s = std::sin(t0), c = std::cos(t0);
        quad.a2(n) += amp * (-0.5 * rate * rate);
        quad.a1(n) += amp * (-rate * s + rate * rate * x_prev(n));
        quad.a0(n) += amp * (c + rate * s * x_prev(n) -
                             0.5 * rate * rate * x_prev(n) * x_prev(n));
      }
    }
  }
  const auto r = solve_chain_quadratic(quad, x_prev, config);
  return r.x;
}

FairnessAoResult run_fairness_ao(const SystemConfig& config,
                                 const RVec* x_init) {
  const auto t_start = std::chrono::steady_clock::now();
  const Topology topo = derive_topology(config);
  const RVec gains = zf_gains(topo, config);
  const RVec D = fairness_weights(config, gains);

  FairnessState s;
  if (x_init) {
    if (!positions_feasible(*x_init, config))
      throw std::invalid_argument("run_fairness_ao: x_init infeasible");
    s.x = *x_init;
  } else if (config.N == 1) {
    s.x.resize(1);
    s.x(0) = config.L / 2.0;
  } else {
    s.x.resize(config.N);
    for (int n = 0; n < config.N; ++n)
      s.x(n) = config.L * n / (config.N - 1);
  }
  s.y = CVec::Constant(config.K, std::complex<double>(1.0, 1.0));
  s.y /= s.y.norm();
  s.trace.push_back(fairness_objective(s.x, s.y, topo, config, D));

  SolveReport report;
  report.converged = false;

  double obj_y = 0.0, obj_x = 0.0;
  int outer = 0;
  for (; outer < config.max_outer; ++outer) {
    // y block: normalized power iteration
    double prev = s.trace.back();
    for (int k = 0; k < config.max_inner; ++k) {
      s.y = update_y(s.x, s.y, topo, config);
      const double cur = fairness_objective(s.x, s.y, topo, config, D);
      s.trace.push_back(cur);
      ++report.iterations;
      const double delta = cur - prev;
      prev = cur;
      if (std::abs(delta) <= config.eps_inner) break;
    }
    obj_y = prev;

    // x block: SCA position updates
    for (int k = 0; k < config.max_inner; ++k) {
      s.x = update_x_fairness(s.x, s.y, topo, config);
      const double cur = fairness_objective(s.x, s.y, topo, config, D);
      s.trace.push_back(cur);
      ++report.iterations;
      const double delta = cur - prev;
      prev = cur;
      if (std::abs(delta) <= config.eps_inner) break;
    }
    obj_x = prev;

    if (std::abs(obj_x - obj_y) <= config.eps_outer) {
      report.converged = true;
      ++outer;
      break;
    }
  }

  // final polish: the exact principal eigenvector can only raise the
  // objective (this is also how w_J is recovered)
  {
    const CMat M = build_weighted_gram(s.x, topo, config, D);
    Eigen::SelfAdjointEigenSolver<CMat> es(M);
    const Eigen::Index top = es.eigenvalues().size() - 1;
    CVec cand = es.eigenvectors().col(top);
    if (std::real(cand.dot(M * cand)) >= s.trace.back()) {
      s.y = cand;
      s.trace.push_back(std::real(cand.dot(M * cand)));
    }
  }

  FairnessAoResult out;
  out.x = s.x;
  auto [w, xi] = optimal_wj_given_x(s.x, topo, config);
  out.w_J = w;
  out.response =
      evaluate_with_gains(config, topo, gains, out.w_J, s.x, Objective::Min);
  report.objective_trace = s.trace;
  report.final_objective = out.response.min_rate;
  report.max_violation = positions_feasible(s.x, config) ? 0.0 : 1.0;
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  // stash the outer count where the harness can read it
  report.iterations = outer;
  out.report = std::move(report);
  out.state = std::move(s);
  return out;
}

}  // namespace majsim
