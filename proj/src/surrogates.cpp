#include "majsim/surrogates.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace majsim {

double log_upper(double eta, double eta0) {
  if (!(eta0 > 0.0)) throw std::invalid_argument("log_upper: eta0 must be positive");
  return std::log(eta0) + (eta - eta0) / eta0;
}

double log_upper_slack(double psi, double psi0) {
  if (!(psi0 > 0.0)) throw std::invalid_argument("log_upper_slack: psi0 must be positive");
  return std::log(psi0) + (psi - psi0) / psi0;
}

double quad_lower_bf(const CVec& w, const CVec& w0, const CMat& G) {
  if ((G - G.adjoint()).cwiseAbs().maxCoeff() >
      1e-9 * (1.0 + G.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("quad_lower_bf: G must be hermitian");
  const CVec Gw0 = G * w0;
  return 2.0 * std::real(w.dot(Gw0)) - std::real(w0.dot(Gw0));
}

double cos_lower(double x, const CosineSurrogateParams& p) {
  const double t0 = p.alpha * p.x0 - p.beta;
  const double dx = x - p.x0;
  return std::cos(t0) - p.alpha * std::sin(t0) * dx - 0.5 * p.delta * dx * dx;
}

namespace {

double principal_eigenvalue(const CMat& W) {
  Eigen::SelfAdjointEigenSolver<CMat> es(W, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

double position_gain_lower(const RVec& x, const RVec& x0, const CMat& W_J,
                           const Topology& topo, const SystemConfig& config,
                           int i) {
  const CVec g0 = jammer_channel(topo, config, x0, i);
  const CVec f = W_J * g0;  // f_i(x0)
  const double inv_sqrt_d = 1.0 / std::sqrt(std::pow(topo.d_J[i], config.tau));
  const double alpha = 2.0 * M_PI / config.lambda * std::sin(topo.phi[i]);
  const double c2 = std::real(g0.dot(f));  // g0^H W g0
  double acc = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const auto p = CosineSurrogateParams::at(alpha, std::arg(f(n)), x0(n));
    acc += std::abs(f(n)) * inv_sqrt_d * cos_lower(x(n), p);
  }
  return 2.0 * acc - c2;
}

double position_gain_upper(const RVec& x, const RVec& x0, const CMat& W_J,
                           const Topology& topo, const SystemConfig& config,
                           int i) {
  const CVec g0 = jammer_channel(topo, config, x0, i);
  const double xi = principal_eigenvalue(W_J);
  const CVec v = xi * g0 - W_J * g0;  // (Phi_J - W_J) g_i(x0)
  const double d_tau = std::pow(topo.d_J[i], config.tau);
  const double inv_sqrt_d = 1.0 / std::sqrt(d_tau);
  const double alpha = 2.0 * M_PI / config.lambda * std::sin(topo.phi[i]);
  const double c3 = std::real(g0.dot(v));
  double theta7 = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const auto p = CosineSurrogateParams::at(alpha, std::arg(v(n)), x0(n));
    theta7 += std::abs(v(n)) * inv_sqrt_d * cos_lower(x(n), p);
  }
  return xi * x.size() / d_tau + c3 - 2.0 * theta7;
}

double smooth_max(double x, double chi) {
  if (!(chi > 0.0)) throw std::invalid_argument("smooth_max: chi must be positive");
  return std::max(x, 0.0) + std::log1p(std::exp(-chi * std::abs(x))) / chi;
}

}  // namespace majsim
