// Command-line front end: run single schemes, sweeps, benches, bounds, the
// two-user pipeline, and convergence traces, emitting CSV.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>

#include "majsim/fairness_ao.hpp"
#include "majsim/harness.hpp"
#include "majsim/special.hpp"
#include "majsim/sumrate_ao.hpp"

namespace {

using namespace majsim;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::string objective = "sum";
  std::string scheme = "proposed";
  bool no_timing = false;
};

SystemConfig resolve_config(const CommonArgs& args) {
  SystemConfig c = args.config_path.empty() ? SystemConfig{}
                                            : load_config(args.config_path);
  if (args.seed) c.seed = *args.seed;
  c.validate();
  return c;
}

void emit(const CommonArgs& args, const std::vector<ResultRow>& rows) {
  if (args.out_path.empty()) {
    write_csv(std::cout, rows, !args.no_timing);
  } else {
    std::ofstream f(args.out_path, std::ios::binary);
    if (!f) throw std::invalid_argument("cannot open output file: " + args.out_path);
    write_csv(f, rows, !args.no_timing);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"movable-antenna jammer optimization simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonArgs args;
  app.add_option("--config", args.config_path, "key = value config file");
  app.add_option("--out", args.out_path, "CSV output path (default stdout)");
  app.add_option("--seed", args.seed, "override the config seed");
  app.add_flag("--no-timing", args.no_timing,
               "zero the runtime column for byte-reproducible CSV");

  auto* cmd_run = app.add_subcommand("run", "run one scheme, one objective");
  cmd_run->add_option("--scheme", args.scheme, "scheme name")->capture_default_str();
  cmd_run->add_option("--objective", args.objective, "sum|min")->capture_default_str();

  auto* cmd_sweep = app.add_subcommand("sweep", "grid sweep from the config's sweep spec");
  auto* cmd_bench = app.add_subcommand("bench", "all schemes at the current config");
  cmd_bench->add_option("--objective", args.objective, "sum|min|both")
      ->capture_default_str();
  auto* cmd_bounds = app.add_subcommand("bounds", "print both performance lower bounds");
  auto* cmd_k2 = app.add_subcommand("k2", "two-user closed-form pipelines (K = 2)");
  auto* cmd_conv = app.add_subcommand("converge", "emit iteration traces of both algorithms");

  CLI11_PARSE(app, argc, argv);

  try {
    bool nonconverged = false;

    if (cmd_run->parsed()) {
      const SystemConfig c = resolve_config(args);
      bool converged = true;
      auto row = run_scheme(c, parse_scheme(args.scheme),
                            parse_objective(args.objective), &converged);
      emit(args, {row});
      return converged ? 0 : 2;
    }

    if (cmd_sweep->parsed()) {
      if (args.config_path.empty())
        throw std::invalid_argument("sweep requires --config with a sweep spec");
      const SystemConfig c = resolve_config(args);
      ExperimentSpec spec = load_experiment_spec(args.config_path);
      if (args.seed) spec.seed = *args.seed;
      emit(args, sweep(c, spec));
      return 0;
    }

    if (cmd_bench->parsed()) {
      const SystemConfig c = resolve_config(args);
      std::vector<Objective> objectives;
      if (args.objective == "both")
        objectives = {Objective::Sum, Objective::Min};
      else
        objectives = {parse_objective(args.objective)};
      std::vector<ResultRow> rows;
      for (Objective obj : objectives) {
        for (Scheme s : {Scheme::Proposed, Scheme::Rap, Scheme::Fpa, Scheme::As,
                         Scheme::FbEap, Scheme::Rula, Scheme::LowerBound}) {
          bool converged = true;
          auto row = run_scheme(c, s, obj, &converged);
          row.experiment = "bench";
          rows.push_back(std::move(row));
          nonconverged = nonconverged || !converged;
        }
      }
      emit(args, rows);
      return nonconverged ? 2 : 0;
    }

    if (cmd_bounds->parsed()) {
      const SystemConfig c = resolve_config(args);
      const Topology topo = derive_topology(c);
      const double lbs = lb_sumrate(c, topo);
      const double lbm = lb_minrate(c, topo);
      std::cout << "LB_sumrate " << lbs << "\n";
      std::cout << "LB_minrate " << lbm << "\n";
      std::vector<ResultRow> rows;
      for (auto [obj, v] : {std::pair{Objective::Sum, lbs}, {Objective::Min, lbm}}) {
        ResultRow row;
        row.experiment = "bounds";
        row.scheme = scheme_name(Scheme::LowerBound);
        row.objective = objective_name(obj);
        row.L = c.L;
        row.Q_J_dbm = c.Q_J_dbm;
        row.seed = c.seed;
        row.rate_bits = v;
        rows.push_back(std::move(row));
      }
      emit(args, rows);
      return 0;
    }

    if (cmd_k2->parsed()) {
      const SystemConfig c = resolve_config(args);
      if (c.K != 2) throw std::invalid_argument("k2 requires K = 2");
      const Topology topo = derive_topology(c);
      const auto sum = k2_sumrate_procedure(c, topo, c.k2_grid_eps);
      const auto fair = k2_fairness(c, topo);
      std::cout << "k2_sum a_star " << sum.a_star << " rate " << sum.rate << "\n";
      std::cout << "k2_min rate " << fair.rate << "\n";
      std::vector<ResultRow> rows(2);
      rows[0].experiment = rows[1].experiment = "k2";
      rows[0].scheme = rows[1].scheme = "proposed";
      rows[0].objective = "sum";
      rows[1].objective = "min";
      rows[0].L = rows[1].L = c.L;
      rows[0].Q_J_dbm = rows[1].Q_J_dbm = c.Q_J_dbm;
      rows[0].seed = rows[1].seed = c.seed;
      rows[0].rate_bits = sum.rate;
      rows[1].rate_bits = fair.rate;
      emit(args, rows);
      return 0;
    }

    if (cmd_conv->parsed()) {
      const SystemConfig c = resolve_config(args);
      auto r1 = run_sumrate_ao(c);
      auto r2 = run_fairness_ao(c);
      nonconverged = !r1.report.converged || !r2.report.converged;
      std::ostream* os = &std::cout;
      std::ofstream f;
      if (!args.out_path.empty()) {
        f.open(args.out_path, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot open output file: " + args.out_path);
        os = &f;
      }
      *os << "algorithm,iteration,objective\n";
      for (size_t i = 0; i < r1.report.objective_trace.size(); ++i)
        *os << "algorithm1," << i << ',' << r1.report.objective_trace[i] << '\n';
      for (size_t i = 0; i < r2.report.objective_trace.size(); ++i)
        *os << "algorithm2," << i << ',' << r2.report.objective_trace[i] << '\n';
      return nonconverged ? 2 : 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
