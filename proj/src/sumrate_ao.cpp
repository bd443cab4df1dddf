#include "majsim/sumrate_ao.hpp"

#include <chrono>
#include <cmath>

namespace majsim {

namespace {

RVec linspace_positions(const SystemConfig& config) {
  RVec x(config.N);
  if (config.N == 1) {
    x(0) = config.L / 2.0;  // uniform grid degenerates for one antenna
    return x;
  }
  for (int n = 0; n < config.N; ++n)
    x(n) = config.L * n / (config.N - 1);
  return x;
}

RVec interference_at(const SystemConfig& config, const Topology& topo,
                     const CVec& w, const RVec& x) {
  RVec den(config.K);
  const double qj = config.q_j_mw();
  for (int i = 0; i < config.K; ++i) {
    const CVec g = jammer_channel(topo, config, x, i);
    den(i) = qj * std::norm(w.dot(g)) + config.sigma2_mw;
  }
  return den;
}

}  // namespace

SumRateState init_sumrate(const SystemConfig& config, const Topology& topo) {
  config.validate();
  SumRateState s;
  s.x = linspace_positions(config);
  CVec w = CVec::Zero(config.N);
  for (int i = 0; i < config.K; ++i) w += jammer_channel(topo, config, s.x, i);
  const double nw = w.norm();
  if (nw > 1e-300) {
    s.w_J = w / nw;
  } else {
    // exact phasor cancellation across users: start from the first channel
    const CVec g0 = jammer_channel(topo, config, s.x, 0);
    s.w_J = g0 / g0.norm();
  }
  s.eta = 5.0;
  s.psi = RVec::Constant(config.K, 100.0);
  return s;
}

void repair_anchor(const SystemConfig& config, const RVec& gains,
                   const RVec& interference, double& eta, RVec& psi) {
  const double chi = config.chi;
  const RVec c = interference.array() / gains.array();
  // check the smoothed-budget rows at the current anchor first
  bool ok = true;
  double lhs = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    lhs += std::log1p(psi(i)) / chi;
    if (chi * (eta - c(i)) < std::log(psi(i)) - 1e-12) ok = false;
    if (psi(i) < 1e-9) ok = false;
  }
  if (ok && lhs >= config.p_sum_mw() - 1e-12 && eta >= 1e-9) return;

  // exact water-filling level, lifted so every slack row admits Psi >= 1e-9
  LinkState link{gains, interference};
  const auto wf = waterfill(link, config.p_sum_mw());
  eta = std::max(*wf.eta, c.maxCoeff() + std::log(1e-9) / chi + 1e-6);
  eta = std::max(eta, 1e-9 * (1.0 + 1e-6));
  psi.resize(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const double e = std::min(chi * (eta - c(i)), 700.0);
    psi(i) = std::max(std::exp(e), 1.0000001e-9);
  }
}

SumRateAoResult run_sumrate_ao(const SystemConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const Topology topo = derive_topology(config);
  const RVec gains = zf_gains(topo, config);

  SumRateState s = init_sumrate(config, topo);
  {
    const RVec den = interference_at(config, topo, s.w_J, s.x);
    repair_anchor(config, gains, den, s.eta, s.psi);
  }

  SolveReport report;
  report.converged = false;
  int outer_done = 0;

  double obj_w_block = 0.0, obj_x_block = 0.0;
  for (int outer = 0; outer < config.max_outer; ++outer) {
    // ---- beamformer block at fixed positions ----
    const CMat g_cols = jammer_channel_matrix(topo, config, s.x);
    std::vector<double> trace_w;
    double prev = relaxed_sum_rate(s.eta, gains,
                                   interference_at(config, topo, s.w_J, s.x));
    trace_w.push_back(prev);
    for (int k = 0; k < config.max_inner; ++k) {
      SumRateAnchor anchor{s.eta, s.w_J, s.x, s.psi};
      auto r = solve_beam_block(gains, g_cols, anchor, config);
      s.eta = r.eta;
      s.w_J = r.w;
      s.psi = r.psi;
      const double cur = relaxed_sum_rate(
          s.eta, gains, interference_at(config, topo, s.w_J, s.x));
      trace_w.push_back(cur);
      const double delta = prev - cur;
      prev = cur;
      if (std::abs(delta) <= config.eps_inner) break;
    }
    obj_w_block = prev;
    s.inner_traces.push_back(std::move(trace_w));
    s.outer_trace.push_back(obj_w_block);

    // ---- position block at fixed beamformer ----
    std::vector<double> trace_x;
    trace_x.push_back(prev);
    for (int k = 0; k < config.max_inner; ++k) {
      SumRateAnchor anchor{s.eta, s.w_J, s.x, s.psi};
      auto r = solve_position_block(gains, s.w_J, topo, anchor, config);
      s.eta = r.eta;
      s.x = r.x;
      s.psi = r.psi;
      const double cur = relaxed_sum_rate(
          s.eta, gains, interference_at(config, topo, s.w_J, s.x));
      trace_x.push_back(cur);
      const double delta = prev - cur;
      prev = cur;
      if (std::abs(delta) <= config.eps_inner) break;
    }
    obj_x_block = prev;
    s.inner_traces.push_back(std::move(trace_x));
    s.outer_trace.push_back(obj_x_block);

    ++outer_done;
    if (std::abs(obj_x_block - obj_w_block) <= config.eps_outer) {
      report.converged = true;
      break;
    }
  }

  SumRateAoResult out;
  out.w_J = s.w_J;
  out.x = s.x;
  out.response =
      evaluate_with_gains(config, topo, gains, s.w_J, s.x, Objective::Sum);
  report.objective_trace = s.outer_trace;
  report.final_objective = out.response.sum_rate;
  report.iterations = outer_done;
  report.max_violation =
      positions_feasible(s.x, config) ? 0.0 : 1.0;  // surfaced by tests
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t_start)
                       .count();
  out.report = std::move(report);
  out.state = std::move(s);
  return out;
}

BeamformingResult optimize_sum_beamforming(const SystemConfig& config,
                                           const RVec& gains,
                                           const CMat& g_cols) {
  BeamformingResult out;
  const int K = config.K;
  CVec w = g_cols.rowwise().sum();
  w /= w.norm();
  RVec den(K);
  const double qj = config.q_j_mw();
  for (int i = 0; i < K; ++i)
    den(i) = qj * std::norm(g_cols.col(i).dot(w)) + config.sigma2_mw;

  double eta = 5.0;
  RVec psi = RVec::Constant(K, 100.0);
  repair_anchor(config, gains, den, eta, psi);

  double prev = relaxed_sum_rate(eta, gains, den);
  out.report.objective_trace.push_back(prev);
  for (int k = 0; k < config.max_inner; ++k) {
    SumRateAnchor anchor{eta, w, RVec(), psi};
    auto r = solve_beam_block(gains, g_cols, anchor, config);
    out.report.iterations += r.report.iterations;
    eta = r.eta;
    w = r.w;
    psi = r.psi;
    for (int i = 0; i < K; ++i)
      den(i) = qj * std::norm(g_cols.col(i).dot(w)) + config.sigma2_mw;
    const double cur = relaxed_sum_rate(eta, gains, den);
    out.report.objective_trace.push_back(cur);
    const double delta = prev - cur;
    prev = cur;
    if (std::abs(delta) <= config.eps_inner) {
      out.report.converged = true;
      break;
    }
  }
  out.eta = eta;
  out.w = w;
  out.psi = psi;
  out.report.final_objective = prev;
  return out;
}

}  // namespace majsim
