#include "majsim/model.hpp"

#include <cmath>
#include <stdexcept>

namespace majsim {

namespace {
constexpr std::complex<double> kJ{0.0, 1.0};
}

CVec st_channel(const Topology& topo, const SystemConfig& config, int i) {
  if (i < 0 || i >= config.K) throw std::out_of_range("st_channel: user index");
  const auto th = config.resolved_theta();
  const double amp = 1.0 / std::sqrt(std::pow(topo.d_S[i], config.tau));
  // fixed ST array: spacing d = lambda/2, so the phase step is pi*sin(theta)
  const double step = M_PI * std::sin(th[i]);
  CVec h(config.M);
  for (int m = 0; m < config.M; ++m) h(m) = amp * std::exp(kJ * (step * m));
  return h;
}

CVec jammer_channel(const Topology& topo, const SystemConfig& config,
                    const RVec& x, int i) {
  if (i < 0 || i >= config.K) throw std::out_of_range("jammer_channel: user index");
  const double amp = 1.0 / std::sqrt(std::pow(topo.d_J[i], config.tau));
  const double rate = 2.0 * M_PI / config.lambda * std::sin(topo.phi[i]);
  CVec g(x.size());
  for (Eigen::Index n = 0; n < x.size(); ++n)
    g(n) = amp * std::exp(kJ * (rate * x(n)));
  return g;
}

CMat jammer_channel_matrix(const Topology& topo, const SystemConfig& config,
                           const RVec& x) {
  CMat G(x.size(), config.K);
  for (int i = 0; i < config.K; ++i) G.col(i) = jammer_channel(topo, config, x, i);
  return G;
}

std::vector<CVec> zf_beamformers(const std::vector<CVec>& h) {
  const int K = static_cast<int>(h.size());
  if (K == 0) return {};
  const int M = static_cast<int>(h[0].size());
  std::vector<CVec> w(K);
  for (int i = 0; i < K; ++i) {
    CVec p;
    if (K == 1) {
      p = h[i];
    } else {
      CMat A(M, K - 1);
      int c = 0;
      for (int j = 0; j < K; ++j)
        if (j != i) A.col(c++) = h[j];
      const CMat gram = A.adjoint() * A;
      Eigen::LDLT<CMat> ldlt(gram);
      CVec coeff = ldlt.solve(A.adjoint() * h[i]);
      p = h[i] - A * coeff;
    }
    const double np = p.norm();
    if (!(np > 1e-12 * h[i].norm())) {
      // name the colliding users so the caller can fix the geometry
      std::string msg = "zf_beamformers: rank deficiency, user " +
                        std::to_string(i) + " collides with {";
      bool first = true;
      for (int j = 0; j < K; ++j) {
        if (j == i) continue;
        const double c =
            std::abs(h[i].dot(h[j])) / (h[i].norm() * h[j].norm());
        if (c > 1.0 - 1e-9) {
          if (!first) msg += ",";
          msg += std::to_string(j);
          first = false;
        }
      }
      msg += "}";
      throw std::invalid_argument(msg);
    }
    w[i] = p / np;
  }
  return w;
}

RVec zf_gains(const Topology& topo, const SystemConfig& config) {
  std::vector<CVec> h(config.K);
  for (int i = 0; i < config.K; ++i) h[i] = st_channel(topo, config, i);
  const auto w = zf_beamformers(h);
  RVec gains(config.K);
  for (int i = 0; i < config.K; ++i)
    gains(i) = std::norm(w[i].dot(h[i]));
  return gains;
}

std::complex<double> channel_correlation(const Topology& topo,
                                         const SystemConfig& config,
                                         const RVec& x, int i, int j) {
  const double amp = 1.0 / std::sqrt(std::pow(topo.d_J[i], config.tau) *
                                     std::pow(topo.d_J[j], config.tau));
  const double rate = 2.0 * M_PI / config.lambda *
                      (std::sin(topo.phi[j]) - std::sin(topo.phi[i]));
  std::complex<double> acc{0.0, 0.0};
  for (Eigen::Index n = 0; n < x.size(); ++n) acc += std::exp(kJ * (rate * x(n)));
  return amp * acc;
}

bool positions_feasible(const RVec& x, const SystemConfig& config) {
  if (x.size() != config.N) return false;
  for (Eigen::Index n = 0; n < x.size(); ++n)
    if (!std::isfinite(x(n))) return false;
  if (x(0) < -kSpacingSlack) return false;
  if (x(x.size() - 1) > config.L + kSpacingSlack) return false;
  for (Eigen::Index n = 1; n < x.size(); ++n)
    if (x(n) - x(n - 1) < config.d_min - kSpacingSlack) return false;
  return true;
}

}  // namespace majsim
