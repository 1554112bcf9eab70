#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustgov/agent.hpp"
#include "trustgov/analytics.hpp"
#include "trustgov/governance.hpp"
#include "trustgov/ledger.hpp"
#include "trustgov/policy.hpp"

namespace trustgov::sim {

struct ReasonerSpec {
  std::string model_id;
  double bias_r = 0.0;
  double bias_t = 0.0;
  double noise = 0.0;
};

struct AgentSpec {
  std::string id;
  std::string domain;
  std::vector<pipeline::Observation> observations;  // the domain's script
  std::vector<ReasonerSpec> reasoners;
  std::map<std::string, double> context_weights;
  // optional overrides of the domain profile defaults
  std::optional<double> lambda;
  std::optional<double> t_base;
  std::optional<metrics::HrtParams> hrt;
  std::optional<double> congestion_per_100m;
  std::optional<pipeline::WeatherBands> bands;
};

/// Configured per-stage simulated costs; the three agent-side stages make up
/// ET and the five governance stages make up D.
struct StageCostsMs {
  double fetch = 20.0;
  double compute = 28.0;
  double agent_chain_log = 10.0;
  double validate = 6.0;
  double mae_select = 5.0;
  double feedback = 3.0;
  double final_decision = 2.0;
  double gov_chain_log = 5.0;

  double et_ms() const { return fetch + compute + agent_chain_log; }
  double d_ms() const { return validate + mae_select + feedback + final_decision + gov_chain_log; }
};

/// Construction check window for the traffic scenario's high-risk plateau.
struct PlateauCheck {
  std::string domain = "traffic";
  int rounds = 16;
  double lo = 0.80;
  double hi = 0.90;
};

struct Scenario {
  std::uint64_t seed = 7;
  int iterations = 3;
  int requests_per_iteration = 20;
  double round_interval_s = 0.25;
  double request_gap_s = 0.25;  // per-agent arrival spacing in performance runs
  std::string baseline_model = "alpha";
  std::vector<AgentSpec> agents;
  StageCostsMs costs;
  PlateauCheck plateau;
  std::optional<double> noise_override;  // >= 0 replaces every reasoner's noise
  ledger::AnchorMode agent_anchor_mode = ledger::AnchorMode::batched;
  ledger::BatchPolicy agent_batch{16, 1.0};

  void validate() const;

  /// Load from JSON; observation csv paths resolve relative to the file.
  static Scenario load(const std::filesystem::path& path);

  /// Built-in 3-agent desk scenario (stable weather, congested traffic,
  /// fire hazard clearing over the run). Mirrors the shipped config files.
  static Scenario default_desk();
};

struct IterationReport {
  int iteration = 0;
  // agent -> model -> one MAE per request of the iteration
  std::map<std::string, std::map<std::string, std::vector<double>>> mae;
  std::map<std::string, std::map<std::string, int>> selections;  // agent -> model -> count
  std::map<std::string, int> fallback_count;                     // per agent
  int escalation_transitions = 0;
  int needs_human_events = 0;
  int unresolved_rounds = 0;
};

struct ConvergenceResult {
  std::vector<IterationReport> iterations;
  gov::GovernanceCounters counters;
  bool escalation_pending = false;
};

ConvergenceResult run_convergence(const Scenario& scenario, const policy::PolicyMatrix& matrix,
                                  const std::filesystem::path& out_dir);

struct PerfPoint {
  int requests = 0;
  int agents = 0;
  double throughput_rps = 0.0;
  double et_ms = 0.0;
  double d_ms = 0.0;
  double span_s = 0.0;
  double mean_gov_wait_ms = 0.0;  // modeled queue wait, excluded from D
};

/// include_wall_clock additionally records real elapsed time per workload in
/// metrics.json; it never touches the deterministic outputs.
std::vector<PerfPoint> run_performance(const Scenario& scenario,
                                       const policy::PolicyMatrix& matrix,
                                       const std::vector<int>& sizes, int agent_count,
                                       const std::filesystem::path& out_dir,
                                       bool include_wall_clock = false);

analytics::IterationMae to_iteration_mae(const IterationReport& report);

}  // namespace trustgov::sim
