#include "majsim/subsolver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace majsim {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kEtaMin = 1e-9;
constexpr double kPsiMin = 1e-9;
constexpr double kLogGuard = 1e-12;  // floor for log arguments off-anchor
}  // namespace

double relaxed_sum_rate(double eta, const RVec& gains,
                        const RVec& interference) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < gains.size(); ++i) {
    const double arg = eta * gains(i) / interference(i);
    if (arg > 1.0) acc += std::log(arg);
  }
  return acc / kLn2;
}

namespace detail {

BarrierResult solve_barrier(const BarrierProblem& prob, RVec z0,
                            const SolverSettings& settings) {
  const int n = prob.dim;
  const int m = static_cast<int>(prob.ineq.size());

  auto constraint_values = [&](const RVec& z, RVec& f) {
    for (int j = 0; j < m; ++j) f(j) = prob.ineq[j].eval(z, nullptr, nullptr);
  };

  RVec f(m);
  constraint_values(z0, f);
  for (int j = 0; j < m; ++j) {
    if (!(f(j) < 0.0)) {
      throw std::logic_error("solve_barrier: start not strictly feasible (row " +
                             std::to_string(j) + ", value " + std::to_string(f(j)) + ")");
    }
  }

  BarrierResult res;
  res.z = std::move(z0);
  res.newton_iters = 0;
  res.converged = false;

  double t = 1.0;
  const double mu = 20.0;
  RVec grad(n), g0(n), gj(n);
  Eigen::MatrixXd hess(n, n), h0(n, n), hj(n, n);

  for (int round = 0; round < 60; ++round) {
    // centering: damped Newton on t*f0 - sum ln(-f_j)
    for (int it = 0; it < 80; ++it) {
      if (res.newton_iters >= settings.max_iters) {
        res.objective = prob.objective.eval(res.z, nullptr, nullptr);
        return res;
      }
      ++res.newton_iters;

      g0.setZero();
      h0.setZero();
      const double f0 = prob.objective.eval(res.z, &g0, &h0);
      grad = t * g0;
      hess = t * h0;
      bool interior = true;
      for (int j = 0; j < m; ++j) {
        gj.setZero();
        hj.setZero();
        const double fj = prob.ineq[j].eval(res.z, &gj, &hj);
        if (!(fj < 0.0)) { interior = false; break; }
        grad += gj / (-fj);
        hess += (gj * gj.transpose()) / (fj * fj) + hj / (-fj);
      }
      if (!interior)
        throw std::logic_error("solve_barrier: iterate left the interior");

      // solve the Newton system, adding a ridge if the factorization degrades
      RVec step(n);
      double ridge = 0.0;
      for (;;) {
        Eigen::MatrixXd H = hess;
        if (ridge > 0.0) H.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        step = ldlt.solve(-grad);
        if (ldlt.info() == Eigen::Success && step.allFinite()) break;
        ridge = (ridge == 0.0) ? 1e-12 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff())
                               : ridge * 100.0;
        if (ridge > 1e20)
          throw std::runtime_error("solve_barrier: singular Newton system");
      }

      const double decrement2 = -grad.dot(step);
      if (decrement2 * 0.5 <= 1e-12 * (1.0 + std::abs(t * f0))) break;

      // backtracking line search keeping strict feasibility
      double phi0 = t * f0;
      for (int j = 0; j < m; ++j)
        phi0 -= std::log(-prob.ineq[j].eval(res.z, nullptr, nullptr));
      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 70; ++ls) {
        RVec zc = res.z + s * step;
        bool ok = true;
        double phic = t * prob.objective.eval(zc, nullptr, nullptr);
        for (int j = 0; j < m && ok; ++j) {
          const double fj = prob.ineq[j].eval(zc, nullptr, nullptr);
          if (!(fj < 0.0) || !std::isfinite(fj)) ok = false;
          else phic -= std::log(-fj);
        }
        if (ok && std::isfinite(phic) &&
            phic <= phi0 - 0.25 * s * decrement2) {
          res.z = std::move(zc);
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) break;  // stalled; the outer round will stop on the gap
    }

    const double obj = prob.objective.eval(res.z, nullptr, nullptr);
    if (static_cast<double>(m) / t <= 1e-11 * (1.0 + std::abs(obj))) {
      res.objective = obj;
      res.converged = true;
      return res;
    }
    t *= mu;
  }
  res.objective = prob.objective.eval(res.z, nullptr, nullptr);
  return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// beam block: the (eta, w_J, Psi) convex step at fixed positions
// ---------------------------------------------------------------------------

namespace {

// Shared slack-row machinery. Psi variables are solved as rho = Psi/Psi_anchor
// so the Newton system stays well-conditioned (Psi spans tens of orders of
// magnitude at water-filling scale).
struct SlackRows {
  RVec psi_k;       // anchor values
  RVec ln_psi_k;
  double chi = 0.0;
  double p_sum = 0.0;

  // row1: P_sum - (1/chi) sum ln(1 + rho_i psi_k_i) <= 0
  double row1(const RVec& rho, RVec* grad_rho, RVec* hess_diag_rho) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < psi_k.size(); ++i) {
      const double psi = rho(i) * psi_k(i);
      acc += std::log1p(psi);
      if (grad_rho) (*grad_rho)(i) = -psi_k(i) / (chi * (1.0 + psi));
      if (hess_diag_rho)
        (*hess_diag_rho)(i) = psi_k(i) * psi_k(i) / (chi * (1.0 + psi) * (1.0 + psi));
    }
    return p_sum - acc / chi;
  }

  // tangent majorant of ln(Psi), written in rho: ln psi_k + (rho - 1)
  double slack_tangent(int i, double rho_i) const { return ln_psi_k(i) + (rho_i - 1.0); }
};

std::string residual_report(const std::vector<std::pair<std::string, double>>& rows) {
  std::ostringstream os;
  os << "anchor infeasible:";
  for (const auto& [name, v] : rows) os << " " << name << "=" << v;
  return os.str();
}

}  // namespace

BeamBlockResult solve_beam_block(const RVec& gains, const CMat& g_cols,
                                 const SumRateAnchor& anchor,
                                 const SystemConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = static_cast<int>(g_cols.rows());
  const int K = static_cast<int>(gains.size());
  const double chi = config.chi;
  const double qj = config.q_j_mw();
  const double sigma2 = config.sigma2_mw;
  const double p_sum = config.p_sum_mw();
  const double guard = std::min(kLogGuard, 0.5 * sigma2);
  const double feas_tol = config.solver.feas_tol;

  if (anchor.w.size() != N || anchor.psi.size() != K)
    throw std::invalid_argument("solve_beam_block: anchor dimension mismatch");
  if (!(anchor.eta > 0.0)) throw std::invalid_argument("solve_beam_block: anchor eta <= 0");

  const double eta_k = anchor.eta;
  const CVec w_k = anchor.w;
  const RVec psi_k = anchor.psi;

  // per-user data: u_i = G_i w_k (rank-1), const_i = w_k^H G_i w_k
  CMat u(N, K);
  RVec const_i(K), c1(K);
  for (int i = 0; i < K; ++i) {
    const std::complex<double> gi_wk = g_cols.col(i).dot(w_k);  // g_i^H w_k
    u.col(i) = g_cols.col(i) * gi_wk;                           // G_i w_k
    const_i(i) = std::norm(gi_wk);
    c1(i) = std::log(gains(i));
  }

  // real parametrization helpers for g_i^H w
  Eigen::MatrixXd Rg = g_cols.real(), Ig = g_cols.imag();

  const int dim = 1 + 2 * N + 2 * K;
  const int iw = 1, irho = 1 + 2 * N, it = 1 + 2 * N + K;

  auto wr_of = [&](const RVec& z) { return z.segment(iw, N); };
  auto wi_of = [&](const RVec& z) { return z.segment(iw + N, N); };

  // A_i(w) = 2 Re(w^H u_i) - const_i  (affine minorant of |g_i^H w|^2)
  auto surrogate_gain = [&](const RVec& z, int i) {
    return 2.0 * (wr_of(z).dot(u.col(i).real()) + wi_of(z).dot(u.col(i).imag())) -
           const_i(i);
  };
  auto exact_gain = [&](const RVec& z, int i, RVec* grad, Eigen::MatrixXd* hess) {
    const double re = Rg.col(i).dot(wr_of(z)) + Ig.col(i).dot(wi_of(z));
    const double im = Rg.col(i).dot(wi_of(z)) - Ig.col(i).dot(wr_of(z));
    if (grad) {
      grad->segment(iw, N) += 2.0 * (re * Rg.col(i) - im * Ig.col(i));
      grad->segment(iw + N, N) += 2.0 * (re * Ig.col(i) + im * Rg.col(i));
    }
    if (hess) {
      RVec dr = RVec::Zero(dim), di = RVec::Zero(dim);
      dr.segment(iw, N) = Rg.col(i);
      dr.segment(iw + N, N) = Ig.col(i);
      di.segment(iw, N) = -Ig.col(i);
      di.segment(iw + N, N) = Rg.col(i);
      *hess += 2.0 * (dr * dr.transpose() + di * di.transpose());
    }
    return re * re + im * im;
  };

  SlackRows rows{psi_k, psi_k.array().log(), chi, p_sum};

  // hinge objective value at a point (t eliminated)
  auto hinge_objective = [&](double eta, auto&& gain_of_i) {
    double acc = 0.0;
    for (int i = 0; i < K; ++i) {
      const double s = std::max(sigma2 + qj * gain_of_i(i), guard);
      const double e = c1(i) + std::log(eta_k) + (eta - eta_k) / eta_k - std::log(s);
      acc += std::max(e, 0.0);
    }
    return acc / kLn2;
  };

  const double anchor_obj =
      hinge_objective(eta_k, [&](int i) { return const_i(i); });

  // --- anchor feasibility (pre-condition) ---
  {
    std::vector<std::pair<std::string, double>> bad;
    RVec rho1 = RVec::Ones(K);
    const double r1 = rows.row1(rho1, nullptr, nullptr);
    if (r1 > feas_tol) bad.push_back({"budget_row", r1});
    for (int i = 0; i < K; ++i) {
      const double lhs = chi * (eta_k - (sigma2 + qj * const_i(i)) / gains(i));
      const double r2 = rows.slack_tangent(i, 1.0) - lhs;
      if (r2 > feas_tol) bad.push_back({"slack_row_" + std::to_string(i), r2});
    }
    const double ball = w_k.squaredNorm() - 1.0;
    if (ball > feas_tol) bad.push_back({"beam_norm", ball});
    if (eta_k < kEtaMin - feas_tol) bad.push_back({"eta_min", kEtaMin - eta_k});
    for (int i = 0; i < K; ++i)
      if (psi_k(i) < kPsiMin - feas_tol)
        bad.push_back({"psi_min_" + std::to_string(i), kPsiMin - psi_k(i)});
    if (!bad.empty()) throw std::invalid_argument(residual_report(bad));
  }

  // --- assemble the convex program ---
  detail::BarrierProblem prob;
  prob.dim = dim;
  prob.objective.eval = [=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) {
      g->setZero();
      g->segment(it, K).setConstant(1.0 / kLn2);
    }
    return z.segment(it, K).sum() / kLn2;
  };

  for (int i = 0; i < K; ++i) {
    // hinge epigraph: e_i(eta, w) - t_i <= 0
    prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      const double A = surrogate_gain(z, i);
      const double s = sigma2 + qj * A;
      const double e = c1(i) + std::log(eta_k) + (z(0) - eta_k) / eta_k - std::log(s);
      if (g) {
        (*g)(0) += 1.0 / eta_k;
        const double coef = -qj / s;
        g->segment(iw, N) += coef * 2.0 * u.col(i).real();
        g->segment(iw + N, N) += coef * 2.0 * u.col(i).imag();
        (*g)(it + i) -= 1.0;
      }
      if (h) {
        RVec ds = RVec::Zero(dim);
        ds.segment(iw, N) = 2.0 * qj * u.col(i).real();
        ds.segment(iw + N, N) = 2.0 * qj * u.col(i).imag();
        *h += (ds * ds.transpose()) / (s * s);
      }
      return e - z(it + i);
    }});
    // t_i >= 0
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(it + i) -= 1.0;
      return -z(it + i);
    }});
    // log-argument guard (affine)
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      const double A = surrogate_gain(z, i);
      if (g) {
        g->segment(iw, N) -= 2.0 * qj * u.col(i).real();
        g->segment(iw + N, N) -= 2.0 * qj * u.col(i).imag();
      }
      return guard - sigma2 - qj * A;
    }});
    // slack row: ln-tangent - chi*(eta - (sigma2 + Q|g^H w|^2)/gain) <= 0
    prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      RVec gq = RVec::Zero(dim);
      Eigen::MatrixXd hq;
      if (h) hq = Eigen::MatrixXd::Zero(dim, dim);
      const double quad = exact_gain(z, i, g ? &gq : nullptr, h ? &hq : nullptr);
      const double coef = chi * qj / gains(i);
      if (g) {
        *g += coef * gq;
        (*g)(0) -= chi;
        (*g)(irho + i) += 1.0;
      }
      if (h) *h += coef * hq;
      return rows.slack_tangent(i, z(irho + i)) -
             chi * (z(0) - (sigma2 + qj * quad) / gains(i));
    }});
    // psi lower bound
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(irho + i) -= psi_k(i);
      return kPsiMin - z(irho + i) * psi_k(i);
    }});
  }
  // beam power: ||w||^2 - 1 <= 0
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
    if (g) g->segment(iw, 2 * N) += 2.0 * z.segment(iw, 2 * N);
    if (h) h->block(iw, iw, 2 * N, 2 * N) += 2.0 * Eigen::MatrixXd::Identity(2 * N, 2 * N);
    return z.segment(iw, 2 * N).squaredNorm() - 1.0;
  }});
  // smoothed budget row 1
  prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
    RVec gr(K), hr(K);
    const double v = rows.row1(z.segment(irho, K), g ? &gr : nullptr, h ? &hr : nullptr);
    if (g) g->segment(irho, K) += gr;
    if (h) h->block(irho, irho, K, K).diagonal() += hr;
    return v;
  }});
  // eta lower bound
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(0) -= 1.0;
    return kEtaMin - z(0);
  }});

  // --- strictly feasible start from the anchor ---
  RVec z0 = RVec::Zero(dim);
  z0(0) = eta_k;
  {
    CVec w0 = w_k;
    const double nw = w0.norm();
    if (nw > 1.0 - 1e-9) w0 *= (1.0 - 1e-7) / nw;
    z0.segment(iw, N) = w0.real();
    z0.segment(iw + N, N) = w0.imag();
  }
  z0.segment(irho, K).setOnes();
  for (int i = 0; i < K; ++i)
    z0(irho + i) = std::max(1.0, 1.0000001 * kPsiMin / psi_k(i));
  // scale rho up until the smoothed budget has strict margin
  {
    RVec rho = z0.segment(irho, K);
    for (int tries = 0; tries < 200; ++tries) {
      if (rows.row1(rho, nullptr, nullptr) < -1e-9 * std::max(1.0, p_sum)) break;
      rho *= 2.0;
    }
    z0.segment(irho, K) = rho;
  }
  // bump eta until the slack rows have strict margin
  {
    double need = 0.0;
    for (int i = 0; i < K; ++i) {
      const double quad = exact_gain(z0, i, nullptr, nullptr);
      const double lhs = chi * (z0(0) - (sigma2 + qj * quad) / gains(i));
      const double slack = lhs - rows.slack_tangent(i, z0(irho + i));
      need = std::max(need, 1e-7 - slack);
    }
    z0(0) += need / chi;
    z0(0) = std::max(z0(0), kEtaMin * (1.0 + 1e-6));
  }
  for (int i = 0; i < K; ++i) {
    const double A = surrogate_gain(z0, i);
    const double s = std::max(sigma2 + qj * A, guard * (1.0 + 1e-6));
    const double e = c1(i) + std::log(eta_k) + (z0(0) - eta_k) / eta_k - std::log(s);
    z0(it + i) = std::max(e, 0.0) + 1.0;
  }

  BeamBlockResult out;
  bool solver_ok = true;
  detail::BarrierResult result;
  try {
    result = detail::solve_barrier(prob, std::move(z0), config.solver);
  } catch (const std::logic_error&) {
    solver_ok = false;
  } catch (const std::runtime_error&) {
    solver_ok = false;
  }

  double obj = anchor_obj;
  if (solver_ok) {
    out.eta = result.z(0);
    out.w = CVec(N);
    out.w.real() = result.z.segment(iw, N);
    out.w.imag() = result.z.segment(iw + N, N);
    out.psi = (result.z.segment(irho, K).array() * psi_k.array()).matrix();
    obj = hinge_objective(out.eta,
                          [&](int i) { return surrogate_gain(result.z, i); });
    out.report.iterations = result.newton_iters;
    out.report.converged = result.converged;
  } else {
    out.report.converged = false;
  }
  out.report.objective_trace = {anchor_obj, obj};
  out.report.final_objective = obj;

  // descent safeguard: a feasible anchor is always an admissible output
  if (!solver_ok || !(obj <= anchor_obj + 1e-9) || !result.z.allFinite()) {
    out.eta = eta_k;
    out.w = w_k;
    out.psi = psi_k;
    out.report.final_objective = anchor_obj;
    out.report.objective_trace = {anchor_obj, anchor_obj};
  }

  // residuals at the returned point
  {
    double viol = 0.0;
    const double quad_norm = out.w.squaredNorm() - 1.0;
    viol = std::max(viol, quad_norm);
    RVec rho = (out.psi.array() / psi_k.array()).matrix();
    viol = std::max(viol, rows.row1(rho, nullptr, nullptr));
    for (int i = 0; i < K; ++i) {
      const double quad = std::norm(g_cols.col(i).dot(out.w));
      const double lhs = chi * (out.eta - (sigma2 + qj * quad) / gains(i));
      viol = std::max(viol, rows.slack_tangent(i, rho(i)) - lhs);
    }
    out.report.max_violation = std::max(viol, 0.0);
  }

  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
          .count();
  return out;
}

// ---------------------------------------------------------------------------
// position block: the (eta, x, Psi) convex step at fixed beamformer
// ---------------------------------------------------------------------------

PositionBlockResult solve_position_block(const RVec& gains, const CVec& w_J,
                                         const Topology& topo,
                                         const SumRateAnchor& anchor,
                                         const SystemConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = config.N;
  const int K = static_cast<int>(gains.size());
  const double chi = config.chi;
  const double qj = config.q_j_mw();
  const double sigma2 = config.sigma2_mw;
  const double p_sum = config.p_sum_mw();
  const double guard = std::min(kLogGuard, 0.5 * sigma2);
  const double feas_tol = config.solver.feas_tol;

  if (anchor.x.size() != N || anchor.psi.size() != K)
    throw std::invalid_argument("solve_position_block: anchor dimension mismatch");

  const double eta_k = anchor.eta;
  const RVec x_k = anchor.x;
  const RVec psi_k = anchor.psi;

  // per-user constants of the gain minorant/majorant at the anchor
  RVec c1(K), alpha(K), inv_sqrt_d(K), d_tau(K), c2(K), c3(K);
  CMat f(N, K), v(N, K);
  const double ximax = w_J.squaredNorm();
  for (int i = 0; i < K; ++i) {
    c1(i) = std::log(gains(i));
    alpha(i) = 2.0 * M_PI / config.lambda * std::sin(topo.phi[i]);
    d_tau(i) = std::pow(topo.d_J[i], config.tau);
    inv_sqrt_d(i) = 1.0 / std::sqrt(d_tau(i));
    const CVec g0 = jammer_channel(topo, config, x_k, i);
    const std::complex<double> wg = w_J.dot(g0);  // w^H g0
    f.col(i) = w_J * wg;                          // W_J g0
    v.col(i) = ximax * g0 - f.col(i);             // (Phi - W) g0
    c2(i) = std::norm(wg);
    c3(i) = std::real(g0.dot(v.col(i)));
  }

  // per-antenna quadratic pieces: gain_lo_i(x) = sum_n [a5 dx^2 + b5 dx + c5] - C2_i
  Eigen::MatrixXd a5(N, K), b5(N, K), cc5(N, K), a8(N, K), b8(N, K), cc8(N, K);
  for (int i = 0; i < K; ++i) {
    for (int n = 0; n < N; ++n) {
      const double Ff = std::abs(f(n, i)) * inv_sqrt_d(i);
      double t0 = alpha(i) * x_k(n) - std::arg(f(n, i));
      a5(n, i) = -Ff * alpha(i) * alpha(i);
      b5(n, i) = -2.0 * Ff * alpha(i) * std::sin(t0);
      cc5(n, i) = 2.0 * Ff * std::cos(t0);
      const double Fv = std::abs(v(n, i)) * inv_sqrt_d(i);
      t0 = alpha(i) * x_k(n) - std::arg(v(n, i));
      a8(n, i) = Fv * alpha(i) * alpha(i);
      b8(n, i) = 2.0 * Fv * alpha(i) * std::sin(t0);
      cc8(n, i) = -2.0 * Fv * std::cos(t0);
    }
  }

  const int dim = 1 + N + 2 * K;
  const int ix = 1, irho = 1 + N, it = 1 + N + K;

  auto gain_lo = [&](const RVec& z, int i, RVec* grad, RVec* hess_diag) {
    double acc = -c2(i);
    for (int n = 0; n < N; ++n) {
      const double dx = z(ix + n) - x_k(n);
      acc += (a5(n, i) * dx + b5(n, i)) * dx + cc5(n, i);
      if (grad) (*grad)(ix + n) = 2.0 * a5(n, i) * dx + b5(n, i);
      if (hess_diag) (*hess_diag)(n) = 2.0 * a5(n, i);
    }
    return acc;
  };
  auto gain_hi = [&](const RVec& z, int i, RVec* grad, RVec* hess_diag) {
    double acc = ximax * N / d_tau(i) + c3(i);
    for (int n = 0; n < N; ++n) {
      const double dx = z(ix + n) - x_k(n);
      acc += (a8(n, i) * dx + b8(n, i)) * dx + cc8(n, i);
      if (grad) (*grad)(ix + n) = 2.0 * a8(n, i) * dx + b8(n, i);
      if (hess_diag) (*hess_diag)(n) = 2.0 * a8(n, i);
    }
    return acc;
  };

  SlackRows rows{psi_k, psi_k.array().log(), chi, p_sum};

  auto hinge_objective = [&](double eta, auto&& gain_lo_of_i) {
    double acc = 0.0;
    for (int i = 0; i < K; ++i) {
      const double s = std::max(sigma2 + qj * gain_lo_of_i(i), guard);
      acc += std::max(c1(i) + std::log(eta_k) + (eta - eta_k) / eta_k - std::log(s), 0.0);
    }
    return acc / kLn2;
  };
  const double anchor_obj = hinge_objective(eta_k, [&](int i) { return c2(i); });

  // anchor feasibility
  {
    std::vector<std::pair<std::string, double>> bad;
    RVec rho1 = RVec::Ones(K);
    const double r1 = rows.row1(rho1, nullptr, nullptr);
    if (r1 > feas_tol) bad.push_back({"budget_row", r1});
    for (int i = 0; i < K; ++i) {
      const double lhs = chi * (eta_k - (sigma2 + qj * c2(i)) / gains(i));
      const double r2 = rows.slack_tangent(i, 1.0) - lhs;
      if (r2 > feas_tol) bad.push_back({"slack_row_" + std::to_string(i), r2});
    }
    if (x_k(0) < -feas_tol) bad.push_back({"box_low", -x_k(0)});
    if (x_k(N - 1) > config.L + feas_tol) bad.push_back({"box_high", x_k(N - 1) - config.L});
    for (int n = 1; n < N; ++n) {
      const double r = config.d_min - (x_k(n) - x_k(n - 1));
      if (r > feas_tol) bad.push_back({"spacing_" + std::to_string(n), r});
    }
    if (!bad.empty()) throw std::invalid_argument(residual_report(bad));
  }

  auto finish_with_anchor = [&](SolveReport report) {
    PositionBlockResult out;
    out.eta = eta_k;
    out.x = x_k;
    out.psi = psi_k;
    report.final_objective = anchor_obj;
    report.objective_trace = {anchor_obj, anchor_obj};
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    out.report = std::move(report);
    return out;
  };

  const double free_span = config.L - (N - 1) * config.d_min;
  if (free_span < 1e-12) {
    // zero-volume position polytope: x is pinned, nothing to optimize
    SolveReport r;
    r.converged = true;
    return finish_with_anchor(r);
  }

  detail::BarrierProblem prob;
  prob.dim = dim;
  prob.objective.eval = [=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) {
      g->setZero();
      g->segment(it, K).setConstant(1.0 / kLn2);
    }
    return z.segment(it, K).sum() / kLn2;
  };

  for (int i = 0; i < K; ++i) {
    // hinge epigraph with the concave minorant inside the log
    prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      RVec gt = RVec::Zero(dim);
      RVec hd(N);
      const double glo = gain_lo(z, i, (g || h) ? &gt : nullptr, h ? &hd : nullptr);
      const double s = sigma2 + qj * glo;
      const double e = c1(i) + std::log(eta_k) + (z(0) - eta_k) / eta_k - std::log(s);
      if (g) {
        (*g)(0) += 1.0 / eta_k;
        g->segment(ix, N) += (-qj / s) * gt.segment(ix, N);
        (*g)(it + i) -= 1.0;
      }
      if (h) {
        RVec ds = qj * gt;
        *h += (ds * ds.transpose()) / (s * s);
        h->block(ix, ix, N, N).diagonal() += (-qj / s) * hd;
      }
      return e - z(it + i);
    }});
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(it + i) -= 1.0;
      return -z(it + i);
    }});
    // guard keeps the log argument positive where the minorant dives
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      RVec gt = RVec::Zero(dim);
      RVec hd(N);
      const double glo = gain_lo(z, i, (g || h) ? &gt : nullptr, h ? &hd : nullptr);
      if (g) g->segment(ix, N) -= qj * gt.segment(ix, N);
      if (h) h->block(ix, ix, N, N).diagonal() -= qj * hd;
      return guard - sigma2 - qj * glo;
    }});
    // slack row with the convex gain majorant
    prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
      RVec gt = RVec::Zero(dim);
      RVec hd(N);
      const double ghi = gain_hi(z, i, (g || h) ? &gt : nullptr, h ? &hd : nullptr);
      if (g) {
        g->segment(ix, N) += (chi * qj / gains(i)) * gt.segment(ix, N);
        (*g)(0) -= chi;
        (*g)(irho + i) += 1.0;
      }
      if (h) h->block(ix, ix, N, N).diagonal() += (chi * qj / gains(i)) * hd;
      return rows.slack_tangent(i, z(irho + i)) -
             chi * (z(0) - (sigma2 + qj * ghi) / gains(i));
    }});
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) (*g)(irho + i) -= psi_k(i);
      return kPsiMin - z(irho + i) * psi_k(i);
    }});
  }
  // chain + box
  for (int n = 1; n < N; ++n) {
    prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
      if (g) {
        (*g)(ix + n) -= 1.0;
        (*g)(ix + n - 1) += 1.0;
      }
      return config.d_min - (z(ix + n) - z(ix + n - 1));
    }});
  }
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(ix) -= 1.0;
    return -z(ix);
  }});
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(ix + N - 1) += 1.0;
    return z(ix + N - 1) - config.L;
  }});
  prob.ineq.push_back({[=, &rows](const RVec& z, RVec* g, Eigen::MatrixXd* h) {
    RVec gr(K), hr(K);
    const double val = rows.row1(z.segment(irho, K), g ? &gr : nullptr, h ? &hr : nullptr);
    if (g) g->segment(irho, K) += gr;
    if (h) h->block(irho, irho, K, K).diagonal() += hr;
    return val;
  }});
  prob.ineq.push_back({[=](const RVec& z, RVec* g, Eigen::MatrixXd*) {
    if (g) (*g)(0) -= 1.0;
    return kEtaMin - z(0);
  }});

  // strictly feasible start
  RVec z0 = RVec::Zero(dim);
  z0(0) = eta_k;
  {
    // pull the anchor positions toward a centered interior point when any
    // chain/box constraint is tight
    RVec xc(N);
    const double margin = free_span / 4.0;
    const double spacing = config.d_min + free_span / (2.0 * (N - 1 > 0 ? N - 1 : 1));
    for (int n = 0; n < N; ++n) xc(n) = margin + spacing * n;
    if (N == 1) xc(0) = config.L / 2.0;
    RVec x0 = x_k;
    double nu = 0.0;
    for (int tries = 0; tries < 12; ++tries) {
      x0 = (1.0 - nu) * x_k + nu * xc;
      double worst = x0(0);
      worst = std::min(worst, config.L - x0(N - 1));
      for (int n = 1; n < N; ++n) worst = std::min(worst, x0(n) - x0(n - 1) - config.d_min);
      if (worst > 1e-10) break;
      nu = (nu == 0.0) ? 1e-7 : nu * 10.0;
    }
    z0.segment(ix, N) = x0;
  }
  z0.segment(irho, K).setOnes();
  for (int i = 0; i < K; ++i)
    z0(irho + i) = std::max(1.0, 1.0000001 * kPsiMin / psi_k(i));
  {
    RVec rho = z0.segment(irho, K);
    for (int tries = 0; tries < 200; ++tries) {
      if (rows.row1(rho, nullptr, nullptr) < -1e-9 * std::max(1.0, p_sum)) break;
      rho *= 2.0;
    }
    z0.segment(irho, K) = rho;
  }
  {
    double need = 0.0;
    for (int i = 0; i < K; ++i) {
      const double ghi = gain_hi(z0, i, nullptr, nullptr);
      const double lhs = chi * (z0(0) - (sigma2 + qj * ghi) / gains(i));
      need = std::max(need, 1e-7 - (lhs - rows.slack_tangent(i, z0(irho + i))));
    }
    z0(0) += need / chi;
    z0(0) = std::max(z0(0), kEtaMin * (1.0 + 1e-6));
  }
  // keep the guard rows strict at the start (the gain minorant at the
  // blended start can sit below its anchor value)
  for (int i = 0; i < K; ++i) {
    const double glo = gain_lo(z0, i, nullptr, nullptr);
    if (sigma2 + qj * glo <= guard * (1.0 + 1e-6)) {
      // fall back to the anchor positions where the minorant is exact
      z0.segment(ix, N) = x_k;
      break;
    }
  }
  for (int i = 0; i < K; ++i) {
    const double glo = gain_lo(z0, i, nullptr, nullptr);
    const double s = std::max(sigma2 + qj * glo, guard * (1.0 + 1e-6));
    const double e = c1(i) + std::log(eta_k) + (z0(0) - eta_k) / eta_k - std::log(s);
    z0(it + i) = std::max(e, 0.0) + 1.0;
  }
  // if the anchor positions were needed for the guard but sit on the chain
  // boundary, the barrier cannot start: detect and return the anchor
  {
    RVec xs = z0.segment(ix, N);
    double worst = xs(0);
    worst = std::min(worst, config.L - xs(N - 1));
    for (int n = 1; n < N; ++n) worst = std::min(worst, xs(n) - xs(n - 1) - config.d_min);
    if (!(worst > 0.0)) {
      SolveReport r;
      r.converged = true;
      return finish_with_anchor(r);
    }
  }

  detail::BarrierResult result;
  try {
    result = detail::solve_barrier(prob, std::move(z0), config.solver);
  } catch (const std::logic_error&) {
    SolveReport r;
    r.converged = false;
    return finish_with_anchor(r);
  } catch (const std::runtime_error&) {
    SolveReport r;
    r.converged = false;
    return finish_with_anchor(r);
  }

  PositionBlockResult out;
  out.eta = result.z(0);
  out.x = result.z.segment(ix, N);
  out.psi = (result.z.segment(irho, K).array() * psi_k.array()).matrix();
  const double obj = hinge_objective(
      out.eta, [&](int i) { return gain_lo(result.z, i, nullptr, nullptr); });

  out.report.iterations = result.newton_iters;
  out.report.converged = result.converged;
  out.report.objective_trace = {anchor_obj, obj};
  out.report.final_objective = obj;

  if (!(obj <= anchor_obj + 1e-9) || !result.z.allFinite()) {
    return finish_with_anchor(out.report);
  }

  {
    double viol = 0.0;
    viol = std::max(viol, -out.x(0));
    viol = std::max(viol, out.x(N - 1) - config.L);
    for (int n = 1; n < N; ++n)
      viol = std::max(viol, config.d_min - (out.x(n) - out.x(n - 1)));
    RVec rho = (out.psi.array() / psi_k.array()).matrix();
    viol = std::max(viol, rows.row1(rho, nullptr, nullptr));
    RVec z = result.z;
    for (int i = 0; i < K; ++i) {
      const double ghi = gain_hi(z, i, nullptr, nullptr);
      const double lhs = chi * (out.eta - (sigma2 + qj * ghi) / gains(i));
      viol = std::max(viol, rows.slack_tangent(i, rho(i)) - lhs);
    }
    out.report.max_violation = std::max(viol, 0.0);
  }
  out.report.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t_start)
                           .count();
  return out;
}

// ---------------------------------------------------------------------------
// separable concave quadratic over the position chain (exact PAVA)
// ---------------------------------------------------------------------------

ChainQuadraticResult solve_chain_quadratic(const SeparableQuadratic& quad,
                                           const RVec& anchor,
                                           const SystemConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  const int N = config.N;
  if (quad.a2.size() != N || quad.a1.size() != N || anchor.size() != N)
    throw std::invalid_argument("solve_chain_quadratic: dimension mismatch");
  const double U = config.L - (N - 1) * config.d_min;
  if (U < 0.0) throw std::invalid_argument("solve_chain_quadratic: infeasible geometry");

  const double curv_scale = quad.a2.cwiseAbs().maxCoeff();
  for (int n = 0; n < N; ++n)
    if (quad.a2(n) > 1e-12 * (1.0 + curv_scale))
      throw std::invalid_argument("solve_chain_quadratic: positive curvature");

  // substitute u_n = x_n - n*d_min: isotonic regression with a uniform box
  struct Block {
    double num, den;  // weighted vertex accumulator
    int lo, hi;
  };
  std::vector<Block> blocks;
  std::vector<double> u(N, std::numeric_limits<double>::quiet_NaN());
  const double wfloor = 1e-14 * (curv_scale > 0.0 ? curv_scale : 1.0);
  for (int n = 0; n < N; ++n) {
    const double wgt = -2.0 * quad.a2(n);
    if (!(wgt > wfloor)) continue;  // flat coordinate, assigned afterwards
    const double vertex = quad.a1(n) / (2.0 * -quad.a2(n)) - n * config.d_min;
    blocks.push_back({wgt * vertex, wgt, n, n});
    while (blocks.size() > 1) {
      const auto& b = blocks.back();
      const auto& a = blocks[blocks.size() - 2];
      if (a.num / a.den <= b.num / b.den) break;  // isotonic, keep
      Block merged{a.num + b.num, a.den + b.den, a.lo, b.hi};
      blocks.pop_back();
      blocks.pop_back();
      blocks.push_back(merged);
    }
  }
  for (const auto& b : blocks) {
    const double val = std::clamp(b.num / b.den, 0.0, U);
    for (int n = b.lo; n <= b.hi; ++n)
      if (-2.0 * quad.a2(n) > wfloor) u[n] = val;
  }
  // flat coordinates keep the anchor value, clamped between solved neighbors
  double lower = 0.0;
  for (int n = 0; n < N; ++n) {
    if (!std::isnan(u[n])) {
      lower = u[n];
      continue;
    }
    double upper = U;
    for (int m = n + 1; m < N; ++m)
      if (!std::isnan(u[m])) {
        upper = u[m];
        break;
      }
    u[n] = std::clamp(anchor(n) - n * config.d_min, lower, upper);
    lower = u[n];
  }

  ChainQuadraticResult out;
  out.x.resize(N);
  for (int n = 0; n < N; ++n) out.x(n) = u[n] + n * config.d_min;
  out.report.final_objective = quad.value(out.x);
  out.report.objective_trace = {quad.value(anchor), out.report.final_objective};
  out.report.iterations = 1;
  out.report.converged = true;
  double viol = std::max(-out.x(0), out.x(N - 1) - config.L);
  for (int n = 1; n < N; ++n)
    viol = std::max(viol, config.d_min - (out.x(n) - out.x(n - 1)));
  out.report.max_violation = std::max(viol, 0.0);
  out.report.wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t_start)
                           .count();
  return out;
}

}  // namespace majsim
