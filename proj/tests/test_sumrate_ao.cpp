#include <doctest.h>

#include <cmath>

#include "majsim/special.hpp"
#include "majsim/sumrate_ao.hpp"

using namespace majsim;

TEST_CASE("init_sumrate follows the uniform grid and stock anchors") {
  SystemConfig c;
  c.L = 2.0;
  const auto topo = derive_topology(c);
  const auto s = init_sumrate(c, topo);
  RVec expect(5);
  expect << 0.0, 0.5, 1.0, 1.5, 2.0;
  CHECK((s.x - expect).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(s.eta == doctest::Approx(5.0));
  for (int i = 0; i < c.K; ++i) CHECK(s.psi(i) == doctest::Approx(100.0));
  CHECK(std::abs(s.w_J.norm() - 1.0) < 1e-12);
}

TEST_CASE("init_sumrate: single antenna sits mid-span") {
  SystemConfig c;
  c.N = 1;
  const auto topo = derive_topology(c);
  const auto s = init_sumrate(c, topo);
  CHECK(s.x(0) == doctest::Approx(c.L / 2.0));
}

TEST_CASE("algorithm 1 on the default scenario") {
  SystemConfig c;
  const auto r = run_sumrate_ao(c);

  CHECK(r.report.converged);
  CHECK(r.report.iterations <= c.max_outer);

  // outer trace is non-increasing within 1e-6
  const auto& trace = r.state.outer_trace;
  REQUIRE(trace.size() >= 2);
  for (size_t i = 1; i < trace.size(); ++i)
    CHECK(trace[i] <= trace[i - 1] + 1e-6);

  // inner traces descend within 1e-9 per step
  for (const auto& inner : r.state.inner_traces)
    for (size_t i = 1; i < inner.size(); ++i)
      CHECK(inner[i] <= inner[i - 1] + 1e-9);

  // every recorded quantity is feasible
  CHECK(positions_feasible(r.x, c));
  CHECK(r.w_J.norm() <= 1.0 + 1e-9);
  for (double p : r.state.psi) CHECK(p >= 1e-9 * (1.0 - 1e-12));

  // ground truth dominates the internal relaxed objective up to the
  // smoothing slack K/chi bits
  CHECK(r.response.sum_rate >= trace.back() - c.K / c.chi - 1e-9);

  // budget is spent exactly in the reported response
  CHECK(std::abs(r.response.powers.sum() - c.p_sum_mw()) <=
        1e-9 * c.p_sum_mw());

  // dominated by no-optimization baselines
  const auto topo = derive_topology(c);
  CHECK(r.response.sum_rate >= lb_sumrate(c, topo) - 1e-6);
}

TEST_CASE("algorithm 1 ignores the jammer block when jamming power vanishes") {
  SystemConfig c;
  c.Q_J_dbm = -400.0;
  const auto r = run_sumrate_ao(c);
  const auto topo = derive_topology(c);
  const RVec gains = zf_gains(topo, c);
  const auto free_wf =
      waterfill(LinkState{gains, RVec::Constant(c.K, c.sigma2_mw)}, c.p_sum_mw());
  CHECK(r.response.sum_rate == doctest::Approx(free_wf.sum_rate).epsilon(1e-9));
}

TEST_CASE("repair_anchor leaves feasible anchors untouched") {
  SystemConfig c;
  const auto topo = derive_topology(c);
  const RVec gains = zf_gains(topo, c);
  RVec den = RVec::Constant(c.K, c.sigma2_mw);

  double eta = 5.0;
  RVec psi = RVec::Constant(c.K, 100.0);
  repair_anchor(c, gains, den, eta, psi);
  const double eta1 = eta;
  RVec psi1 = psi;
  repair_anchor(c, gains, den, eta, psi);  // already feasible: no change
  CHECK(eta == eta1);
  CHECK((psi - psi1).cwiseAbs().maxCoeff() == 0.0);

  // the repaired point satisfies both smoothed rows
  double lhs = 0.0;
  for (int i = 0; i < c.K; ++i) {
    lhs += std::log1p(psi(i)) / c.chi;
    CHECK(c.chi * (eta - den(i) / gains(i)) >= std::log(psi(i)) - 1e-12);
  }
  CHECK(lhs >= c.p_sum_mw() - 1e-12);
}

TEST_CASE("optimize_sum_beamforming descends from the channel-sum start") {
  SystemConfig c;
  const auto topo = derive_topology(c);
  const RVec gains = zf_gains(topo, c);
  RVec x(5);
  x << 0.0, 0.5, 1.0, 1.5, 2.0;
  const CMat g = jammer_channel_matrix(topo, c, x);
  const auto r = optimize_sum_beamforming(c, gains, g);
  REQUIRE(r.report.objective_trace.size() >= 2);
  CHECK(r.report.objective_trace.back() <=
        r.report.objective_trace.front() + 1e-9);
  CHECK(r.w.norm() <= 1.0 + 1e-9);
}
