#include "majsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace majsim {

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double SystemConfig::p_sum_mw() const { return dbm_to_mw(P_sum_dbm); }
double SystemConfig::q_j_mw() const { return dbm_to_mw(Q_J_dbm); }

std::vector<double> SystemConfig::resolved_theta() const {
  if (!theta.empty()) return theta;
  std::vector<double> t(K);
  const double lo = -M_PI / 3.0, hi = M_PI / 3.0;
  if (K == 1) {
    t[0] = 0.0;
  } else {
    for (int i = 0; i < K; ++i) t[i] = lo + (hi - lo) * i / (K - 1);
  }
  return t;
}

void SystemConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("config: " + msg); };
  if (M < K) fail("M must be >= K");
  if (K < 1) fail("K must be >= 1");
  if (N < 1) fail("N must be >= 1");
  if (!(r > 0.0) || !(r_d > 0.0)) fail("distances must be positive");
  if (!(tau > 0.0)) fail("tau must be positive");
  if (!(lambda > 0.0)) fail("lambda must be positive");
  if (!(d_min >= 0.0)) fail("d_min must be nonnegative");
  if (!(L > 0.0)) fail("L must be positive");
  if ((N - 1) * d_min > L) fail("(N-1)*d_min exceeds L: no feasible positions");
  if (!(sigma2_mw > 0.0)) fail("sigma2_mw must be positive");
  if (!(chi > 0.0)) fail("chi must be positive");
  if (!(eps_outer > 0.0) || !(eps_inner > 0.0)) fail("tolerances must be positive");
  if (max_outer < 1 || max_inner < 1) fail("iteration caps must be >= 1");
  const auto th = resolved_theta();
  if (static_cast<int>(th.size()) != K) fail("theta must list K angles");
  for (double t : th) {
    if (!(t > -M_PI / 2 && t < M_PI / 2)) fail("theta entries must lie strictly inside (-pi/2, pi/2)");
  }
  if (rap_draws < 1 || fbeap_draws < 1 || rula_angles < 2) fail("benchmark counts out of range");
  if (!(k2_grid_eps > 0.0 && k2_grid_eps <= 1.0)) fail("k2_grid_eps must be in (0, 1]");
  if (!(solver.kkt_tol > 0.0) || !(solver.feas_tol > 0.0) || solver.max_iters < 1)
    fail("solver settings must be positive");
}

Topology derive_topology(const SystemConfig& config) {
  config.validate();
  const auto th = config.resolved_theta();
  Topology t;
  t.d_S.resize(config.K);
  t.d_J.resize(config.K);
  t.phi.resize(config.K);
  for (int i = 0; i < config.K; ++i) {
    t.d_S[i] = config.r / std::cos(th[i]);
    const double off = config.r * std::tan(th[i]);
    t.d_J[i] = std::hypot(config.r_d, off);
    t.phi[i] = std::atan(off / config.r_d);
  }
  return t;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

}  // namespace

SystemConfig parse_config(const std::string& text) {
  SystemConfig c;
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "M") c.M = std::stoi(val);
      else if (key == "K") c.K = std::stoi(val);
      else if (key == "N") c.N = std::stoi(val);
      else if (key == "r") c.r = std::stod(val);
      else if (key == "r_d") c.r_d = std::stod(val);
      else if (key == "theta") c.theta = parse_list(val);
      else if (key == "tau") c.tau = std::stod(val);
      else if (key == "lambda") c.lambda = std::stod(val);
      else if (key == "d_min") c.d_min = std::stod(val);
      else if (key == "L") c.L = std::stod(val);
      else if (key == "P_sum_dbm") c.P_sum_dbm = std::stod(val);
      else if (key == "Q_J_dbm") c.Q_J_dbm = std::stod(val);
      else if (key == "sigma2_mw") c.sigma2_mw = std::stod(val);
      else if (key == "chi") c.chi = std::stod(val);
      else if (key == "eps_outer") c.eps_outer = std::stod(val);
      else if (key == "eps_inner") c.eps_inner = std::stod(val);
      else if (key == "max_outer") c.max_outer = std::stoi(val);
      else if (key == "max_inner") c.max_inner = std::stoi(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "rap_draws") c.rap_draws = std::stoi(val);
      else if (key == "fbeap_draws") c.fbeap_draws = std::stoi(val);
      else if (key == "rula_angles") c.rula_angles = std::stoi(val);
      else if (key == "k2_grid_eps") c.k2_grid_eps = std::stod(val);
      else if (key == "kkt_tol") c.solver.kkt_tol = std::stod(val);
      else if (key == "feas_tol") c.solver.feas_tol = std::stod(val);
      else if (key == "max_iters") c.solver.max_iters = std::stoi(val);
      else if (key == "name" || key == "objective" || key == "schemes" ||
               key == "sweep" || key == "trials") {
        // experiment-spec keys, handled by load_experiment_spec
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for '" + key + "'");
    }
  }
  c.validate();
  return c;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

}  // namespace majsim
