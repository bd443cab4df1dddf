#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "majsim/rng.hpp"
#include "majsim/st_response.hpp"
#include "majsim/subsolver.hpp"

namespace majsim {

enum class Scheme { Proposed, Rap, Fpa, As, FbEap, Rula, LowerBound };

std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& name);
std::string objective_name(Objective o);
Objective parse_objective(const std::string& name);

struct SweepSpec {
  std::string parameter;      // one of "L", "Q_J_dbm", "mu"
  std::vector<double> grid;
};

struct ExperimentSpec {
  std::string name = "experiment";
  Objective objective = Objective::Sum;
  std::vector<Scheme> schemes;
  std::optional<SweepSpec> sweep;
  int trials = 1;
  std::uint64_t seed = 0;
};

struct ResultRow {
  std::string experiment;
  std::string scheme;
  std::string objective;
  double L = 0.0;
  double Q_J_dbm = 0.0;
  double mu = 0.0;
  std::uint64_t seed = 0;
  double rate_bits = 0.0;
  int iterations = 0;
  double runtime_ms = 0.0;
};

/// Uniform draw over the feasible position polytope: N sorted uniforms on
/// [0, L-(N-1)d_min] shifted by (n-1) d_min.
RVec random_feasible_positions(const SystemConfig& config, Xoshiro256pp& rng);

/// Runs one benchmark scheme for one objective and scores it through the
/// ground-truth ST response. `converged`, when given, reports whether the
/// underlying optimizer met its termination criterion (always true for the
/// enumeration-style benchmarks).
ResultRow run_scheme(const SystemConfig& config, Scheme scheme,
                     Objective objective, bool* converged = nullptr);

/// Grid sweep: patches the swept parameter, runs every scheme per point.
/// Grid points with no feasible positions are skipped with a note to stderr.
std::vector<ResultRow> sweep(const SystemConfig& config,
                             const ExperimentSpec& spec);

/// AoA-error robustness: optimize each scheme on the estimated angles, then
/// average the true rate over `trials` draws of the actual angles per mu.
std::vector<ResultRow> robustness_aoa(const SystemConfig& config,
                                      const std::vector<double>& mu_grid,
                                      int trials, std::uint64_t seed,
                                      const std::vector<Scheme>& schemes,
                                      Objective objective);

/// Per-(scheme, mu) Monte Carlo mean and standard error of the mean.
struct RobustnessStats {
  std::vector<Scheme> schemes;
  std::vector<double> mu_grid;
  std::vector<std::vector<double>> mean;         // [scheme][mu]
  std::vector<std::vector<double>> stderr_mean;  // [scheme][mu]
};
RobustnessStats robustness_stats(const SystemConfig& config,
                                 const std::vector<double>& mu_grid, int trials,
                                 std::uint64_t seed,
                                 const std::vector<Scheme>& schemes,
                                 Objective objective);

/// CSV with a header row, 12 significant digits. include_timing=false zeroes
/// the runtime column so outputs are byte-reproducible.
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows,
               bool include_timing = true);

/// Parses ExperimentSpec keys (name/objective/schemes/sweep/trials/seed)
/// from the same key=value file as SystemConfig.
ExperimentSpec load_experiment_spec(const std::string& path);

}  // namespace majsim
