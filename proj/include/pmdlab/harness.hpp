#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pmdlab/hard_mdps.hpp"
#include "pmdlab/mdp.hpp"
#include "pmdlab/pmd.hpp"

namespace pmdlab {

/// One experiment run, parsed from a JSON document. Parsing validates every
/// field (generator names, mirror map ids, schedule parameters) and reports
/// the offending field on failure.
struct RunConfig {
  std::string id;
  nlohmann::json mdp_source() const;
  std::string map_id = "kl";
  std::optional<StepSizeSchedule> schedule;
  int iterations = 0;
  std::uint64_t seed = 0;
  bool verify = false;
  std::string init_kind = "default";  // default | generator | uniform | alpha
  double init_alpha = 0.0;
  std::string out;  // optional trace CSV path

  std::string mdp_source_text;  // serialized source subdocument
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig parse_run_config_text(const std::string& text);

/// CLI string form, e.g. "adaptive:c0=1", "adaptive:c0=1,ck=const",
/// "geometric:eta0=100", "constant:eta0=0.5", "combined:c0=1,eta0=1".
/// Append ",per_state" for per-state step sizes.
StepSizeSchedule parse_schedule_spec(const std::string& spec);
std::string describe_schedule(const StepSizeSchedule& schedule);

struct MdpWithInit {
  TabularMdp mdp;
  std::optional<Policy> initial_policy;  // set by the chain generators
};

/// Resolve an MDP source: {"generator": ...}, {"path": ...} or an inline
/// interchange document.
MdpWithInit build_mdp_source(const nlohmann::json& source,
                             std::uint64_t default_seed = 0);

/// Execute one config. The trace CSV (when requested) is only written after
/// the run finishes, so verification failures never leave outputs behind.
IterationTrace run_config(const RunConfig& config);

struct SweepResult {
  std::string csv;  ///< config_id,iter,sup_gap,eta,bound_theorem1,min_q_increase
  std::vector<std::string> errors;  ///< one entry per failed config
  bool all_ok = true;
};

/// Runs all configs, parallel across configs, and aggregates their traces
/// into one CSV sorted by (config_id, iter). Deterministic given seeds.
SweepResult sweep(const std::vector<RunConfig>& configs, int parallelism);

/// c_k = gamma^{2k} for k = 0..iterations, the scaling used by the chain
/// simulation experiment.
CkSequence simulation_ck(double gamma, int iterations);

struct SimulationRun {
  IterationTrace trace;
  std::string variant;
  std::string csv_path;
  std::string svg_path;
};

/// Chain simulation: n = 25, gamma = 0.99, 300 NPG iterations under the
/// chosen step-size variant ("adaptive", "increasing" with eta0 = 1, or their
/// pointwise "combined" maximum). Writes the trace CSV and a convergence SVG
/// with the gamma-rate reference curve into out_dir.
SimulationRun run_chain_simulation(double alpha, const std::string& variant,
                                   const std::string& out_dir);

struct LowerBoundReport {
  bool passed = false;
  double margin = 0.0;  ///< min over schedules and k < n of gap(k)/(gamma^k gap0)
  double gap0 = 0.0;
  double delta = 0.0;
  std::string text;
  std::vector<std::pair<std::string, int>> failures;  ///< (schedule, k)
};

/// Rate lower-bound check on the hard chain with the proof's parameter
/// delta = (1-gamma) gamma^n gap0 / 4 (two passes: provisional delta, measure
/// gap0, rebuild). Runs NPG under every schedule and asserts
/// gap(k) >= 0.5 gamma^k gap0 for all k < n. Writes the report to out_path
/// when nonempty.
LowerBoundReport check_lower_bound(int n, double gamma,
                                   const std::vector<StepSizeSchedule>& schedules,
                                   const std::string& out_path);

}  // namespace pmdlab
