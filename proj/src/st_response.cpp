#include "majsim/st_response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace majsim {

namespace {

void check_link(const LinkState& link) {
  if (link.gain.size() != link.interference.size())
    throw std::invalid_argument("LinkState: size mismatch");
  for (Eigen::Index i = 0; i < link.gain.size(); ++i)
    if (!(link.gain(i) > 0.0) || !(link.interference(i) > 0.0))
      throw std::invalid_argument("LinkState: entries must be positive");
}

}  // namespace

StResponse waterfill(const LinkState& link, double P_sum) {
  check_link(link);
  if (!(P_sum > 0.0)) throw std::invalid_argument("waterfill: P_sum must be positive");
  const Eigen::Index K = link.gain.size();
  RVec c = link.interference.array() / link.gain.array();

  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return c(a) < c(b); });

  // level over the k cheapest users: eta = (P + sum of their c) / k; grow the
  // active set until the level no longer reaches the next user
  double eta = 0.0;
  double prefix = 0.0;
  for (Eigen::Index k = 1; k <= K; ++k) {
    prefix += c(order[k - 1]);
    eta = (P_sum + prefix) / static_cast<double>(k);
    if (k == K || eta <= c(order[k])) break;
  }

  StResponse r;
  r.eta = eta;
  r.powers = (eta - c.array()).max(0.0);
  // absorb rounding so the budget holds exactly
  const double tot = r.powers.sum();
  if (tot > 0.0) r.powers *= P_sum / tot;
  r.sinrs = r.powers.array() * link.gain.array() / link.interference.array();
  auto [s, m] = rates(link, r.powers);
  r.sum_rate = s;
  r.min_rate = m;
  return r;
}

StResponse equal_sinr_alloc(const LinkState& link, double P_sum) {
  check_link(link);
  if (!(P_sum > 0.0)) throw std::invalid_argument("equal_sinr_alloc: P_sum must be positive");
  RVec c = link.interference.array() / link.gain.array();
  const double total = c.sum();
  StResponse r;
  r.powers = P_sum * c.array() / total;
  r.sinrs = r.powers.array() * link.gain.array() / link.interference.array();
  auto [s, m] = rates(link, r.powers);
  r.sum_rate = s;
  r.min_rate = m;
  return r;
}

std::pair<double, double> rates(const LinkState& link, const RVec& powers) {
  check_link(link);
  if (powers.size() != link.gain.size())
    throw std::invalid_argument("rates: size mismatch");
  double sum = 0.0;
  double mn = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < powers.size(); ++i) {
    if (powers(i) < -1e-15) throw std::invalid_argument("rates: negative power");
    const double g = powers(i) * link.gain(i) / link.interference(i);
    const double ri = std::log2(1.0 + g);
    sum += ri;
    mn = std::min(mn, ri);
  }
  return {sum, mn};
}

LinkState make_link_state(const SystemConfig& config, const Topology& topo,
                          const CVec& w_J, const RVec& x) {
  LinkState link;
  link.gain = zf_gains(topo, config);
  link.interference.resize(config.K);
  const double qj = config.q_j_mw();
  for (int i = 0; i < config.K; ++i) {
    const CVec g = jammer_channel(topo, config, x, i);
    link.interference(i) = qj * std::norm(w_J.dot(g)) + config.sigma2_mw;
  }
  return link;
}

StResponse evaluate_with_gains(const SystemConfig& config, const Topology& topo,
                               const RVec& gains, const CVec& w_J,
                               const RVec& x, Objective objective) {
  if (w_J.norm() > 1.0 + 1e-9)
    throw std::invalid_argument("evaluate_jammer_action: ||w_J|| > 1");
  // spacing is physical; the [0, L] box is an optimization-domain constraint
  // and benchmark architectures (antenna selection) legitimately exceed it
  for (Eigen::Index n = 1; n < x.size(); ++n)
    if (x(n) - x(n - 1) < config.d_min - kSpacingSlack)
      throw std::invalid_argument("evaluate_jammer_action: spacing violation");
  LinkState link;
  link.gain = gains;
  link.interference.resize(config.K);
  const double qj = config.q_j_mw();
  for (int i = 0; i < config.K; ++i) {
    const CVec g = jammer_channel(topo, config, x, i);
    link.interference(i) = qj * std::norm(w_J.dot(g)) + config.sigma2_mw;
  }
  return objective == Objective::Sum ? waterfill(link, config.p_sum_mw())
                                     : equal_sinr_alloc(link, config.p_sum_mw());
}

StResponse evaluate_jammer_action(const SystemConfig& config,
                                  const Topology& topo, const CVec& w_J,
                                  const RVec& x, Objective objective) {
  return evaluate_with_gains(config, topo, zf_gains(topo, config), w_J, x,
                             objective);
}

}  // namespace majsim
