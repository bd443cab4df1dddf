#include "majsim/harness.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "majsim/fairness_ao.hpp"
#include "majsim/special.hpp"
#include "majsim/sumrate_ao.hpp"

namespace majsim {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Proposed: return "proposed";
    case Scheme::Rap: return "rap";
    case Scheme::Fpa: return "fpa";
    case Scheme::As: return "as";
    case Scheme::FbEap: return "fb_eap";
    case Scheme::Rula: return "rula";
    case Scheme::LowerBound: return "lower_bound";
  }
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  if (name == "proposed") return Scheme::Proposed;
  if (name == "rap") return Scheme::Rap;
  if (name == "fpa") return Scheme::Fpa;
  if (name == "as") return Scheme::As;
  if (name == "fb_eap") return Scheme::FbEap;
  if (name == "rula") return Scheme::Rula;
  if (name == "lower_bound") return Scheme::LowerBound;
  throw std::invalid_argument("unknown scheme: " + name);
}

std::string objective_name(Objective o) {
  return o == Objective::Sum ? "sum" : "min";
}

Objective parse_objective(const std::string& name) {
  if (name == "sum") return Objective::Sum;
  if (name == "min") return Objective::Min;
  throw std::invalid_argument("unknown objective: " + name);
}

RVec random_feasible_positions(const SystemConfig& config, Xoshiro256pp& rng) {
  const int N = config.N;
  const double free_span = config.L - (N - 1) * config.d_min;
  if (free_span < 0.0)
    throw std::invalid_argument("random_feasible_positions: infeasible geometry");
  std::vector<double> u(N);
  for (auto& v : u) v = rng.uniform(0.0, free_span);
  std::sort(u.begin(), u.end());
  RVec x(N);
  for (int n = 0; n < N; ++n) x(n) = u[n] + n * config.d_min;
  return x;
}

namespace {

RVec fpa_positions(const SystemConfig& config) {
  RVec x(config.N);
  for (int n = 0; n < config.N; ++n) x(n) = n * config.lambda / 2.0;
  return x;
}

// principal-eigenvector jamming beam for the weighted channels at fixed x
CVec min_objective_beam(const CMat& g_cols, const RVec& D) {
  CMat G = g_cols;
  for (Eigen::Index i = 0; i < D.size(); ++i) G.col(i) *= std::sqrt(D(i));
  Eigen::SelfAdjointEigenSolver<CMat> es(G.adjoint() * G);
  CVec w = G * es.eigenvectors().col(D.size() - 1);
  const double nw = w.norm();
  if (nw > 1e-300) w /= nw;
  else {
    w = CVec::Zero(g_cols.rows());
    w(0) = 1.0;
  }
  return w;
}

CVec channel_sum_beam(const CMat& g_cols) {
  CVec w = g_cols.rowwise().sum();
  const double nw = w.norm();
  if (nw > 1e-300) return w / nw;
  CVec e = CVec::Zero(g_cols.rows());
  e(0) = 1.0;
  return e;
}

struct SchemeAction {
  CVec w;
  RVec x;
  double rotation = 0.0;  // RULA boresight angle, 0 elsewhere
  int iterations = 0;
  bool converged = true;
};

Topology rotated(const Topology& topo, double rho) {
  Topology t = topo;
  for (auto& p : t.phi) p -= rho;
  return t;
}

// beam optimization at fixed positions for one objective
CVec optimize_beam(const SystemConfig& config, const RVec& gains,
                   const CMat& g_cols, Objective objective) {
  if (objective == Objective::Sum)
    return optimize_sum_beamforming(config, gains, g_cols).w;
  return min_objective_beam(g_cols, fairness_weights(config, gains));
}

double score(const SystemConfig& config, const Topology& topo,
             const RVec& gains, const CVec& w, const RVec& x,
             Objective objective) {
  const auto resp = evaluate_with_gains(config, topo, gains, w, x, objective);
  return objective == Objective::Sum ? resp.sum_rate : resp.min_rate;
}

SchemeAction optimize_scheme_action(const SystemConfig& config,
                                    const Topology& topo, const RVec& gains,
                                    Scheme scheme, Objective objective) {
  SchemeAction act;
  switch (scheme) {
    case Scheme::Proposed: {
      if (objective == Objective::Sum) {
        auto r = run_sumrate_ao(config);
        act.w = r.w_J;
        act.x = r.x;
        act.iterations = r.report.iterations;
        act.converged = r.report.converged;
      } else {
        auto r = run_fairness_ao(config);
        act.w = r.w_J;
        act.x = r.x;
        act.iterations = r.report.iterations;
        act.converged = r.report.converged;
      }
      break;
    }
    case Scheme::Fpa: {
      act.x = fpa_positions(config);
      const CMat g = jammer_channel_matrix(topo, config, act.x);
      act.w = optimize_beam(config, gains, g, objective);
      act.iterations = 1;
      break;
    }
    case Scheme::Rap: {
      Xoshiro256pp rng(config.seed);
      auto stream = rng.fork(0x52415031);  // per-scheme stream
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < config.rap_draws; ++t) {
        const RVec x = random_feasible_positions(config, stream);
        const CMat g = jammer_channel_matrix(topo, config, x);
        const CVec w = optimize_beam(config, gains, g, objective);
        const double v = score(config, topo, gains, w, x, objective);
        if (v < best) {
          best = v;
          act.w = w;
          act.x = x;
        }
      }
      act.iterations = config.rap_draws;
      break;
    }
    case Scheme::As: {
      const int total = config.N + 3;
      RVec lattice(total);
      for (int n = 0; n < total; ++n) lattice(n) = n * config.lambda / 2.0;
      std::vector<bool> pick(total, false);
      std::fill(pick.begin(), pick.begin() + config.N, true);
      double best = std::numeric_limits<double>::infinity();
      int count = 0;
      do {
        RVec x(config.N);
        int m = 0;
        for (int n = 0; n < total; ++n)
          if (pick[n]) x(m++) = lattice(n);
        const CMat g = jammer_channel_matrix(topo, config, x);
        const CVec w = optimize_beam(config, gains, g, objective);
        const double v = score(config, topo, gains, w, x, objective);
        if (v < best) {
          best = v;
          act.w = w;
          act.x = x;
        }
        ++count;
      } while (std::prev_permutation(pick.begin(), pick.end()));
      act.iterations = count;
      break;
    }
    case Scheme::FbEap: {
      Xoshiro256pp rng(config.seed);
      auto stream = rng.fork(0x46424541);
      double best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < config.fbeap_draws; ++t) {
        const RVec x = random_feasible_positions(config, stream);
        const CMat g = jammer_channel_matrix(topo, config, x);
        const CVec w = channel_sum_beam(g);
        const double v = score(config, topo, gains, w, x, objective);
        if (v < best) {
          best = v;
          act.w = w;
          act.x = x;
        }
      }
      act.iterations = config.fbeap_draws;
      break;
    }
    case Scheme::Rula: {
      act.x = fpa_positions(config);
      double best = std::numeric_limits<double>::infinity();
      const double lo = -M_PI / 5.0, hi = M_PI / 5.0;
      for (int t = 0; t < config.rula_angles; ++t) {
        const double rho = lo + (hi - lo) * t / (config.rula_angles - 1);
        const Topology tr = rotated(topo, rho);
        const CMat g = jammer_channel_matrix(tr, config, act.x);
        const CVec w = optimize_beam(config, gains, g, objective);
        const double v = score(config, tr, gains, w, act.x, objective);
        if (v < best) {
          best = v;
          act.w = w;
          act.rotation = rho;
        }
      }
      act.iterations = config.rula_angles;
      break;
    }
    case Scheme::LowerBound:
      throw std::logic_error("lower_bound has no jammer action");
  }
  return act;
}

}  // namespace

ResultRow run_scheme(const SystemConfig& config, Scheme scheme,
                     Objective objective, bool* converged) {
  config.validate();
  if (converged) *converged = true;
  const auto t0 = std::chrono::steady_clock::now();
  const Topology topo = derive_topology(config);
  const RVec gains = zf_gains(topo, config);

  ResultRow row;
  row.experiment = "run";
  row.scheme = scheme_name(scheme);
  row.objective = objective_name(objective);
  row.L = config.L;
  row.Q_J_dbm = config.Q_J_dbm;
  row.mu = 0.0;
  row.seed = config.seed;

  if (scheme == Scheme::LowerBound) {
    row.rate_bits = objective == Objective::Sum ? lb_sumrate(config, topo)
                                                : lb_minrate(config, topo);
    row.iterations = 0;
  } else {
    const auto act = optimize_scheme_action(config, topo, gains, scheme, objective);
    const Topology teval = rotated(topo, act.rotation);
    row.rate_bits = score(config, teval, gains, act.w, act.x, objective);
    row.iterations = act.iterations;
    if (converged) *converged = act.converged;
  }
  row.runtime_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return row;
}

std::vector<ResultRow> sweep(const SystemConfig& config,
                             const ExperimentSpec& spec) {
  std::vector<ResultRow> rows;
  if (spec.schemes.empty()) return rows;

  if (spec.sweep && spec.sweep->parameter == "mu") {
    auto rr = robustness_aoa(config, spec.sweep->grid, spec.trials, spec.seed,
                             spec.schemes, spec.objective);
    for (auto& r : rr) r.experiment = spec.name;
    return rr;
  }

  std::vector<double> grid = spec.sweep ? spec.sweep->grid
                                        : std::vector<double>{0.0};
  for (size_t gi = 0; gi < grid.size(); ++gi) {
    SystemConfig c = config;
    c.seed = spec.seed;
    if (spec.sweep) {
      if (spec.sweep->parameter == "L") c.L = grid[gi];
      else if (spec.sweep->parameter == "Q_J_dbm") c.Q_J_dbm = grid[gi];
      else throw std::invalid_argument("sweep: unknown parameter " + spec.sweep->parameter);
    }
    if ((c.N - 1) * c.d_min > c.L) {
      std::cerr << "sweep: skipping " << spec.sweep->parameter << " = "
                << grid[gi] << " (no feasible positions)\n";
      continue;
    }
    for (Scheme s : spec.schemes) {
      ResultRow row = run_scheme(c, s, spec.objective);
      row.experiment = spec.name;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

RobustnessStats robustness_stats(const SystemConfig& config,
                                 const std::vector<double>& mu_grid, int trials,
                                 std::uint64_t seed,
                                 const std::vector<Scheme>& schemes,
                                 Objective objective) {
  if (trials < 1) throw std::invalid_argument("robustness: trials must be >= 1");
  config.validate();
  const Topology topo = derive_topology(config);
  const RVec gains = zf_gains(topo, config);
  const auto theta_hat = config.resolved_theta();

  RobustnessStats stats;
  stats.mu_grid = mu_grid;

  std::vector<SchemeAction> actions;
  for (Scheme s : schemes) {
    if (s == Scheme::LowerBound) {
      std::cerr << "robustness: lower_bound has no action, skipping\n";
      continue;
    }
    stats.schemes.push_back(s);
    actions.push_back(optimize_scheme_action(config, topo, gains, s, objective));
  }

  bool warned_clamp = false;
  const double theta_cap = M_PI / 2.0 - 1e-6;

  stats.mean.resize(stats.schemes.size());
  stats.stderr_mean.resize(stats.schemes.size());
  for (size_t si = 0; si < stats.schemes.size(); ++si) {
    stats.mean[si].assign(mu_grid.size(), 0.0);
    stats.stderr_mean[si].assign(mu_grid.size(), 0.0);
  }

  Xoshiro256pp root(seed);
  for (size_t mi = 0; mi < mu_grid.size(); ++mi) {
    const double mu = mu_grid[mi];
    std::vector<std::vector<double>> samples(stats.schemes.size());
    for (int t = 0; t < trials; ++t) {
      auto rng = root.fork(static_cast<std::uint64_t>(mi) * 1000003ULL + t);
      SystemConfig c_true = config;
      c_true.theta.resize(config.K);
      Topology topo_true = topo;  // distances stay at the estimates
      for (int i = 0; i < config.K; ++i) {
        double th = theta_hat[i] + rng.uniform(-mu / 2.0, mu / 2.0);
        if (th > theta_cap || th < -theta_cap) {
          th = std::clamp(th, -theta_cap, theta_cap);
          if (!warned_clamp) {
            std::cerr << "robustness: theta clamped inside (-pi/2, pi/2)\n";
            warned_clamp = true;
          }
        }
        c_true.theta[i] = th;
        topo_true.phi[i] = topo.phi[i] + rng.uniform(-mu / 2.0, mu / 2.0);
      }
      const RVec gains_true = zf_gains(topo_true, c_true);
      for (size_t si = 0; si < stats.schemes.size(); ++si) {
        const Topology teval = rotated(topo_true, actions[si].rotation);
        samples[si].push_back(score(c_true, teval, gains_true, actions[si].w,
                                    actions[si].x, objective));
      }
    }
    for (size_t si = 0; si < stats.schemes.size(); ++si) {
      double m = 0.0;
      for (double v : samples[si]) m += v;
      m /= trials;
      double var = 0.0;
      for (double v : samples[si]) var += (v - m) * (v - m);
      var = trials > 1 ? var / (trials - 1) : 0.0;
      stats.mean[si][mi] = m;
      stats.stderr_mean[si][mi] = std::sqrt(var / trials);
    }
  }
  return stats;
}

std::vector<ResultRow> robustness_aoa(const SystemConfig& config,
                                      const std::vector<double>& mu_grid,
                                      int trials, std::uint64_t seed,
                                      const std::vector<Scheme>& schemes,
                                      Objective objective) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto stats =
      robustness_stats(config, mu_grid, trials, seed, schemes, objective);
  std::vector<ResultRow> rows;
  for (size_t mi = 0; mi < stats.mu_grid.size(); ++mi) {
    for (size_t si = 0; si < stats.schemes.size(); ++si) {
      ResultRow row;
      row.experiment = "robustness";
      row.scheme = scheme_name(stats.schemes[si]);
      row.objective = objective_name(objective);
      row.L = config.L;
      row.Q_J_dbm = config.Q_J_dbm;
      row.mu = stats.mu_grid[mi];
      row.seed = seed;
      row.rate_bits = stats.mean[si][mi];
      row.iterations = trials;
      row.runtime_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows,
               bool include_timing) {
  os << "experiment,scheme,objective,L,Q_J_dbm,mu,seed,rate_bits,iterations,"
        "runtime_ms\n";
  for (const auto& r : rows) {
    os << r.experiment << ',' << r.scheme << ',' << r.objective << ','
       << fmt(r.L) << ',' << fmt(r.Q_J_dbm) << ',' << fmt(r.mu) << ','
       << r.seed << ',' << fmt(r.rate_bits) << ',' << r.iterations << ','
       << fmt(include_timing ? r.runtime_ms : 0.0) << '\n';
  }
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();

  ExperimentSpec spec;
  spec.schemes = {Scheme::Proposed, Scheme::Rap,  Scheme::Fpa,       Scheme::As,
                  Scheme::FbEap,    Scheme::Rula, Scheme::LowerBound};
  std::stringstream in(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "name") {
      spec.name = val;
    } else if (key == "objective") {
      spec.objective = parse_objective(val);
    } else if (key == "trials") {
      spec.trials = std::stoi(val);
    } else if (key == "seed") {
      spec.seed = std::stoull(val);
    } else if (key == "schemes") {
      spec.schemes.clear();
      std::stringstream ls(val);
      std::string item;
      while (std::getline(ls, item, ','))
        if (!trim(item).empty()) spec.schemes.push_back(parse_scheme(trim(item)));
    } else if (key == "sweep") {
      // "<parameter> v1,v2,v3"
      const auto sp = val.find_first_of(" \t");
      if (sp == std::string::npos)
        throw std::invalid_argument("sweep: expected '<parameter> <grid>'");
      SweepSpec sw;
      sw.parameter = trim(val.substr(0, sp));
      std::stringstream ls(val.substr(sp + 1));
      std::string item;
      while (std::getline(ls, item, ','))
        if (!trim(item).empty()) sw.grid.push_back(std::stod(trim(item)));
      if (sw.grid.empty()) throw std::invalid_argument("sweep: empty grid");
      spec.sweep = std::move(sw);
    }
  }
  if (spec.trials < 1) throw std::invalid_argument("trials must be >= 1");
  return spec;
}

}  // namespace majsim
