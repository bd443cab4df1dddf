#include <doctest.h>

#include <cmath>

#include "majsim/rng.hpp"
#include "majsim/st_response.hpp"
#include "majsim/subsolver.hpp"
#include "majsim/sumrate_ao.hpp"

using namespace majsim;

namespace {

struct SumRateSetup {
  SystemConfig config;
  Topology topo;
  RVec gains;
  CMat g_cols;
  SumRateAnchor anchor;
};

SumRateSetup default_setup() {
  SumRateSetup s;
  s.topo = derive_topology(s.config);
  s.gains = zf_gains(s.topo, s.config);
  RVec x(5);
  x << 0.0, 0.575, 1.15, 1.725, 2.3;
  s.g_cols = jammer_channel_matrix(s.topo, s.config, x);
  CVec w = s.g_cols.rowwise().sum();
  w /= w.norm();
  RVec den(s.config.K);
  for (int i = 0; i < s.config.K; ++i)
    den(i) = s.config.q_j_mw() * std::norm(s.g_cols.col(i).dot(w)) +
             s.config.sigma2_mw;
  double eta = 5.0;
  RVec psi = RVec::Constant(s.config.K, 100.0);
  repair_anchor(s.config, s.gains, den, eta, psi);
  s.anchor = {eta, w, x, psi};
  return s;
}

// largest Psi each slack row allows at (eta, w-interference), for sampling
RVec psi_cap(const SystemConfig& c, const RVec& gains, const RVec& den,
             double eta, const RVec& psi_k) {
  RVec cap(psi_k.size());
  for (Eigen::Index i = 0; i < psi_k.size(); ++i) {
    const double lhs = c.chi * (eta - den(i) / gains(i));
    cap(i) = psi_k(i) * (lhs - std::log(psi_k(i)) + 1.0);
  }
  return cap;
}

}  // namespace

TEST_CASE("solve_chain_quadratic: flat objective returns the anchor") {
  SystemConfig c;
  SeparableQuadratic q{RVec::Zero(5), RVec::Zero(5), RVec::Zero(5)};
  RVec anchor(5);
  anchor << 0.0, 0.6, 1.2, 1.8, 2.3;
  const auto r = solve_chain_quadratic(q, anchor, c);
  CHECK((r.x - anchor).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("solve_chain_quadratic: interior vertices are returned untouched") {
  SystemConfig c;
  RVec v(5);
  v << 0.1, 0.8, 1.4, 1.95, 2.5;  // feasible and d_min-separated
  c.L = 3.0;
  SeparableQuadratic q;
  q.a2 = RVec::Constant(5, -1.0);
  q.a1 = 2.0 * v;
  q.a0 = RVec::Zero(5);
  RVec anchor(5);
  anchor << 0.0, 0.6, 1.2, 1.8, 2.4;
  const auto r = solve_chain_quadratic(q, anchor, c);
  CHECK((r.x - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solve_chain_quadratic: colliding vertices straddle at exactly d_min") {
  SystemConfig c;
  c.N = 2;
  c.L = 2.3;
  c.d_min = 0.5;
  // vertices 0.1 apart with weights 1 and 3: constrained optimum keeps the
  // weighted mean and the pair at minimum spacing
  const double v1 = 1.0, v2 = 1.1, w1 = 1.0, w2 = 3.0;
  SeparableQuadratic q;
  q.a2 = RVec(2);
  q.a1 = RVec(2);
  q.a0 = RVec::Zero(2);
  q.a2 << -w1 / 2.0, -w2 / 2.0;
  q.a1 << w1 * v1, w2 * v2;
  RVec anchor(2);
  anchor << 0.3, 1.5;
  const auto r = solve_chain_quadratic(q, anchor, c);
  CHECK(r.x(1) - r.x(0) == doctest::Approx(0.5).epsilon(1e-12));
  // KKT: weighted average of shifted vertices
  const double m = (w1 * (v1) + w2 * (v2 - 0.5)) / (w1 + w2);
  CHECK(r.x(0) == doctest::Approx(m).epsilon(1e-12));

  // brute-force grid oracle at 1e-4 resolution along the active constraint
  double best = -1e300, best_x1 = 0.0;
  for (double x1 = 0.0; x1 <= c.L - 0.5; x1 += 1e-4) {
    RVec x(2);
    x << x1, x1 + 0.5;
    const double val = q.value(x);
    if (val > best) {
      best = val;
      best_x1 = x1;
    }
  }
  CHECK(std::abs(best_x1 - r.x(0)) <= 2e-4);
  CHECK(q.value(r.x) >= best - 1e-9);
}

TEST_CASE("solve_chain_quadratic agrees with a generic dense solve") {
  SystemConfig c;
  Xoshiro256pp rng(47);
  for (int trial = 0; trial < 10; ++trial) {
    SeparableQuadratic q;
    q.a2 = RVec(c.N);
    q.a1 = RVec(c.N);
    q.a0 = RVec::Zero(c.N);
    for (int n = 0; n < c.N; ++n) {
      const double w = rng.uniform(0.2, 3.0);
      const double v = rng.uniform(-0.5, 3.0);
      q.a2(n) = -0.5 * w;
      q.a1(n) = w * v;
    }
    RVec anchor(c.N);
    anchor << 0.0, 0.575, 1.15, 1.725, 2.3;
    const auto pava = solve_chain_quadratic(q, anchor, c);

    // dense oracle: barrier method on min -q(x) over the same polytope
    detail::BarrierProblem prob;
    prob.dim = c.N;
    prob.objective.eval = [&](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      double val = 0.0;
      if (g) g->setZero();
      for (int n = 0; n < c.N; ++n) {
        val -= (q.a2(n) * z(n) + q.a1(n)) * z(n) + q.a0(n);
        if (g) (*g)(n) = -(2.0 * q.a2(n) * z(n) + q.a1(n));
        if (h) (*h)(n, n) = -2.0 * q.a2(n);
      }
      return val;
    };
    for (int n = 1; n < c.N; ++n) {
      prob.ineq.push_back({[&, n](const RVec& z, RVec* g, Eigen::MatrixXd*) {
        if (g) {
          (*g)(n) -= 1.0;
          (*g)(n - 1) += 1.0;
        }
        return c.d_min - (z(n) - z(n - 1));
      }});
    }
    prob.ineq.push_back({[&](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(0) -= 1.0;
      return -z(0);
    }});
    prob.ineq.push_back({[&](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(c.N - 1) += 1.0;
      return z(c.N - 1) - c.L;
    }});
    RVec z0(c.N);
    z0 << 0.05, 0.6, 1.15, 1.7, 2.25;
    const auto res = detail::solve_barrier(prob, z0, c.solver);
    CHECK(q.value(pava.x) >= -res.objective - 1e-8);
    CHECK(std::abs(q.value(pava.x) - (-res.objective)) <= 1e-6);
  }
}

TEST_CASE("solve_beam_block: descent, feasibility, determinism") {
  auto s = default_setup();
  const auto r1 = solve_beam_block(s.gains, s.g_cols, s.anchor, s.config);
  CHECK(r1.report.final_objective <=
        r1.report.objective_trace.front() + 1e-9);
  CHECK(r1.report.max_violation <= s.config.solver.feas_tol);
  CHECK(r1.w.norm() <= 1.0 + 1e-9);

  const auto r2 = solve_beam_block(s.gains, s.g_cols, s.anchor, s.config);
  CHECK(r1.eta == r2.eta);
  CHECK((r1.w - r2.w).cwiseAbs().maxCoeff() == 0.0);
  CHECK((r1.psi - r2.psi).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_beam_block: converged anchor is a fixed point") {
  auto s = default_setup();
  SumRateAnchor anchor = s.anchor;
  for (int it = 0; it < 400; ++it) {
    const auto r = solve_beam_block(s.gains, s.g_cols, anchor, s.config);
    const double change = std::abs(r.report.objective_trace.front() -
                                   r.report.final_objective);
    anchor.eta = r.eta;
    anchor.w = r.w;
    anchor.psi = r.psi;
    if (change < 1e-12) break;
  }
  const auto r = solve_beam_block(s.gains, s.g_cols, anchor, s.config);
  CHECK(r.report.final_objective <= r.report.objective_trace.front() + 1e-9);
  CHECK(std::abs(r.report.final_objective - r.report.objective_trace.front()) <=
        1e-9);
}

TEST_CASE("solve_beam_block: zero jamming power decouples the beam") {
  auto s = default_setup();
  SystemConfig c = s.config;
  c.Q_J_dbm = -400.0;  // numerically zero milliwatts
  RVec den = RVec::Constant(c.K, c.sigma2_mw);
  double eta = 5.0;
  RVec psi = RVec::Constant(c.K, 100.0);
  repair_anchor(c, s.gains, den, eta, psi);
  SumRateAnchor anchor{eta, s.anchor.w, s.anchor.x, psi};
  const auto r = solve_beam_block(s.gains, s.g_cols, anchor, c);

  // eta-only oracle: grid search with the slack rows eliminated
  const RVec cl = den.array() / s.gains.array();
  double best = 1e300;
  for (double e = 1e-9; e <= eta * 2.0; e += eta / 2e5) {
    RVec cap = psi_cap(c, s.gains, den, e, psi);
    if (cap.minCoeff() < 1e-9) continue;
    double lhs = 0.0;
    for (int i = 0; i < c.K; ++i) lhs += std::log1p(cap(i)) / c.chi;
    if (lhs < c.p_sum_mw()) continue;
    best = std::min(best, relaxed_sum_rate(e, s.gains, den));
  }
  CHECK(r.report.final_objective <= best + 1e-6);
}

TEST_CASE("solve_beam_block beats random feasible sampling") {
  auto s = default_setup();
  // iterate to the SCA fixed point first (the contract is per-subproblem,
  // checked at a converged anchor where the surrogate equals the objective)
  SumRateAnchor anchor = s.anchor;
  for (int it = 0; it < 80; ++it) {
    const auto r = solve_beam_block(s.gains, s.g_cols, anchor, s.config);
    const double change = std::abs(r.report.objective_trace.front() -
                                   r.report.final_objective);
    anchor.eta = r.eta;
    anchor.w = r.w;
    anchor.psi = r.psi;
    if (change < 1e-12) break;
  }
  const auto r = solve_beam_block(s.gains, s.g_cols, anchor, s.config);

  const SystemConfig& c = s.config;
  Xoshiro256pp rng(53);
  double best_sample = 1e300;
  const double kLn2 = std::log(2.0);
  for (int t = 0; t < 100000; ++t) {
    // random beam in the unit ball, random level
    CVec w(c.N);
    for (int n = 0; n < c.N; ++n)
      w(n) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    w *= std::pow(rng.uniform(), 1.0 / (2 * c.N)) / w.norm();
    const double eta = rng.uniform(0.0, 3.0 * anchor.eta);
    RVec den(c.K);
    for (int i = 0; i < c.K; ++i)
      den(i) = c.q_j_mw() * std::norm(s.g_cols.col(i).dot(w)) + c.sigma2_mw;
    // feasibility via the largest admissible slacks
    const RVec cap = psi_cap(c, s.gains, den, eta, anchor.psi);
    if (cap.minCoeff() < 1e-9) continue;
    double lhs = 0.0;
    for (int i = 0; i < c.K; ++i) lhs += std::log1p(cap(i)) / c.chi;
    if (lhs < c.p_sum_mw()) continue;
    // surrogate objective at the sample (exact quadratic = tangent affine
    // only at the anchor; the affine surrogate is what P2.2 minimizes)
    double obj = 0.0;
    for (int i = 0; i < c.K; ++i) {
      const std::complex<double> giw = s.g_cols.col(i).dot(anchor.w);
      const double A =
          2.0 * std::real(w.dot(s.g_cols.col(i) * giw)) - std::norm(giw);
      const double sden = std::max(c.sigma2_mw + c.q_j_mw() * A, 1e-12);
      obj += std::max(std::log(eta * s.gains(i) / sden), 0.0);
    }
    best_sample = std::min(best_sample, obj / kLn2);
  }
  CHECK(r.report.final_objective <= best_sample + 1e-6);
}

TEST_CASE("solve_beam_block: the first step descends strictly and beats sampling") {
  auto s = default_setup();
  const SystemConfig& c = s.config;
  const auto r = solve_beam_block(s.gains, s.g_cols, s.anchor, c);
  // the initialization anchor is not stationary, so the step moves
  CHECK(r.report.final_objective < r.report.objective_trace.front() - 1e-6);

  Xoshiro256pp rng(59);
  double best_sample = 1e300;
  const double kLn2 = std::log(2.0);
  for (int t = 0; t < 100000; ++t) {
    CVec w(c.N);
    for (int n = 0; n < c.N; ++n) w(n) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    w *= std::pow(rng.uniform(), 1.0 / (2 * c.N)) / w.norm();
    const double eta = rng.uniform(0.0, 3.0 * s.anchor.eta);
    RVec den(c.K);
    for (int i = 0; i < c.K; ++i)
      den(i) = c.q_j_mw() * std::norm(s.g_cols.col(i).dot(w)) + c.sigma2_mw;
    const RVec cap = psi_cap(c, s.gains, den, eta, s.anchor.psi);
    if (cap.minCoeff() < 1e-9) continue;
    double lhs = 0.0;
    for (int i = 0; i < c.K; ++i) lhs += std::log1p(cap(i)) / c.chi;
    if (lhs < c.p_sum_mw()) continue;
    double obj = 0.0;
    for (int i = 0; i < c.K; ++i) {
      const std::complex<double> giw = s.g_cols.col(i).dot(s.anchor.w);
      const double A =
          2.0 * std::real(w.dot(s.g_cols.col(i) * giw)) - std::norm(giw);
      const double sden = std::max(c.sigma2_mw + c.q_j_mw() * A, 1e-12);
      obj += std::max(std::log(eta * s.gains(i) / sden), 0.0);
    }
    best_sample = std::min(best_sample, obj / kLn2);
  }
  CHECK(r.report.final_objective <= best_sample + 1e-6);
}

TEST_CASE("solve_position_block beats random feasible position sampling") {
  auto s = default_setup();
  const SystemConfig& c = s.config;
  const auto r = solve_position_block(s.gains, s.anchor.w, s.topo, s.anchor, c);

  // evaluate the P2.4 surrogate at random feasible (eta, x) samples with the
  // slacks set to their largest admissible values
  const double ximax = s.anchor.w.squaredNorm();
  CMat f(c.N, c.K), v(c.N, c.K);
  RVec c2(c.K), c3(c.K), alpha(c.K), invs(c.K), dt(c.K);
  for (int i = 0; i < c.K; ++i) {
    const CVec g0 = jammer_channel(s.topo, c, s.anchor.x, i);
    const std::complex<double> wg = s.anchor.w.dot(g0);
    f.col(i) = s.anchor.w * wg;
    v.col(i) = ximax * g0 - f.col(i);
    c2(i) = std::norm(wg);
    c3(i) = std::real(g0.dot(v.col(i)));
    alpha(i) = 2.0 * M_PI / c.lambda * std::sin(s.topo.phi[i]);
    dt(i) = std::pow(s.topo.d_J[i], c.tau);
    invs(i) = 1.0 / std::sqrt(dt(i));
  }
  auto gain_lo = [&](const RVec& x, int i) {
    double acc = -c2(i);
    for (int n = 0; n < c.N; ++n) {
      const double t0 = alpha(i) * s.anchor.x(n) - std::arg(f(n, i));
      const double dx = x(n) - s.anchor.x(n);
      acc += 2.0 * std::abs(f(n, i)) * invs(i) *
             (std::cos(t0) - alpha(i) * std::sin(t0) * dx -
              0.5 * alpha(i) * alpha(i) * dx * dx);
    }
    return acc;
  };
  auto gain_hi = [&](const RVec& x, int i) {
    double acc = ximax * c.N / dt(i) + c3(i);
    for (int n = 0; n < c.N; ++n) {
      const double t0 = alpha(i) * s.anchor.x(n) - std::arg(v(n, i));
      const double dx = x(n) - s.anchor.x(n);
      acc -= 2.0 * std::abs(v(n, i)) * invs(i) *
             (std::cos(t0) - alpha(i) * std::sin(t0) * dx -
              0.5 * alpha(i) * alpha(i) * dx * dx);
    }
    return acc;
  };

  Xoshiro256pp rng(61);
  double best_sample = 1e300;
  const double kLn2 = std::log(2.0);
  for (int t = 0; t < 100000; ++t) {
    RVec x(c.N);
    {
      const double free_span = c.L - (c.N - 1) * c.d_min;
      std::vector<double> u(c.N);
      for (auto& uu : u) uu = rng.uniform(0.0, free_span);
      std::sort(u.begin(), u.end());
      for (int n = 0; n < c.N; ++n) x(n) = u[n] + n * c.d_min;
    }
    const double eta = rng.uniform(0.0, 3.0 * s.anchor.eta);
    RVec den8(c.K);
    for (int i = 0; i < c.K; ++i)
      den8(i) = c.q_j_mw() * gain_hi(x, i) + c.sigma2_mw;
    const RVec cap = psi_cap(c, s.gains, den8, eta, s.anchor.psi);
    if (cap.minCoeff() < 1e-9) continue;
    double lhs = 0.0;
    for (int i = 0; i < c.K; ++i) lhs += std::log1p(cap(i)) / c.chi;
    if (lhs < c.p_sum_mw()) continue;
    double obj = 0.0;
    bool valid = true;
    for (int i = 0; i < c.K; ++i) {
      const double sden = c.sigma2_mw + c.q_j_mw() * gain_lo(x, i);
      if (sden < 1e-12) { valid = false; break; }
      obj += std::max(std::log(eta * s.gains(i) / sden), 0.0);
    }
    if (!valid) continue;
    best_sample = std::min(best_sample, obj / kLn2);
  }
  CHECK(r.report.final_objective <= best_sample + 1e-6);
}

TEST_CASE("solve_position_block: descent, feasibility, exact chain constraints") {
  auto s = default_setup();
  const auto r = solve_position_block(s.gains, s.anchor.w, s.topo, s.anchor, s.config);
  CHECK(r.report.final_objective <= r.report.objective_trace.front() + 1e-9);
  CHECK(r.report.max_violation <= s.config.solver.feas_tol);
  for (int n = 1; n < s.config.N; ++n)
    CHECK(r.x(n) - r.x(n - 1) >= s.config.d_min - s.config.solver.feas_tol);
  CHECK(r.x(0) >= -s.config.solver.feas_tol);
  CHECK(r.x(s.config.N - 1) <= s.config.L + s.config.solver.feas_tol);

  const auto r2 = solve_position_block(s.gains, s.anchor.w, s.topo, s.anchor, s.config);
  CHECK((r.x - r2.x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve_position_block: single broadside user sees a flat landscape") {
  SystemConfig c;
  c.K = 1;
  c.M = 1;
  c.N = 1;
  c.theta = {0.0};
  const auto topo = derive_topology(c);
  const RVec gains = zf_gains(topo, c);
  RVec x(1);
  x << 1.0;
  CVec w(1);
  w << 1.0;
  RVec den(1);
  den << c.q_j_mw() * std::norm(jammer_channel(topo, c, x, 0).dot(w)) +
             c.sigma2_mw;
  double eta = 5.0;
  RVec psi = RVec::Constant(1, 100.0);
  repair_anchor(c, gains, den, eta, psi);
  SumRateAnchor anchor{eta, w, x, psi};
  const auto r = solve_position_block(gains, w, topo, anchor, c);
  CHECK(std::abs(r.report.final_objective - r.report.objective_trace.front()) <=
        1e-9);
}

TEST_CASE("solve_beam_block/p24: infeasible anchors are rejected with residuals") {
  auto s = default_setup();
  SumRateAnchor bad = s.anchor;
  bad.psi = RVec::Constant(s.config.K, 1e30);  // wrecks the slack rows
  CHECK_THROWS_WITH_AS(solve_beam_block(s.gains, s.g_cols, bad, s.config),
                       doctest::Contains("anchor infeasible"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(solve_position_block(s.gains, s.anchor.w, s.topo, bad, s.config),
                       doctest::Contains("anchor infeasible"),
                       std::invalid_argument);
}
