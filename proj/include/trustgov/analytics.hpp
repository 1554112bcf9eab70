#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace trustgov::analytics {

struct PairedSample {
  std::vector<double> before;
  std::vector<double> after;  // same length, paired by request
};

struct WilcoxonResult {
  double w = 0.0;       // min of the positive- and negative-rank sums
  double p_value = 1.0; // two-sided
  int n_effective = 0;  // pairs left after dropping zero differences
};

enum class WilcoxonMethod { automatic, exact, normal_approximation };

/// Wilcoxon signed-rank test: average-rank ties, zero differences dropped,
/// W = min(W+, W-). Exact p by full sign enumeration up to n_effective = 12;
/// above that, a normal approximation with continuity correction, tie-aware
/// variance and an Edgeworth kurtosis term. All differences zero degenerates
/// to (W=0, p=1, n=0).
WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

constexpr int kWilcoxonExactLimit = 12;

/// agent -> model -> one MAE value per request of the iteration.
using IterationMae = std::map<std::string, std::map<std::string, std::vector<double>>>;

struct ReductionRow {
  std::string agent;  // empty for pooled rows
  std::string model;
  double mean_first = 0.0;
  double mean_final = 0.0;
  std::optional<double> reduction;  // unset when the first-iteration mean is zero
};

struct ReductionReport {
  std::vector<ReductionRow> per_agent;
  std::vector<ReductionRow> pooled;
  std::map<std::string, double> baseline_mean;  // agent -> baseline model mean MAE, all rounds
  std::map<std::string, double> oracle_mean;    // agent -> mean of per-request minima
  std::string baseline_model;
};

/// Iteration-over-iteration MAE reduction per model, in per-agent and pooled
/// groupings, plus single-model baseline and oracle-selection columns.
ReductionReport mae_reduction(const std::vector<IterationMae>& iterations,
                              const std::string& baseline_model);

/// Erlang-C probability that an arrival waits, for c servers.
double erlang_c(double arrival_rate, double service_rate, int servers);
/// Mean queue wait (seconds). Unstable load returns +infinity.
double erlang_c_wait_s(double arrival_rate, double service_rate, int servers);

struct MeasuredPoint {
  int agents = 0;
  int requests = 0;
  double throughput_rps = 0.0;
  double et_ms = 0.0;  // agent-side execution time per request
  double d_ms = 0.0;   // governance busy time per request
};

struct Projection {
  int agents = 0;
  bool saturated = false;
  double utilization = 0.0;
  double throughput_rps = 0.0;
  double et_ms = 0.0;
  double d_ms = 0.0;  // service + projected wait
};

/// Default per-step agent-side contention growth applied to ET as the agent
/// count grows by one measured-configuration increment.
constexpr double kDefaultContention = 1.106;

/// Queueing projection: service rate calibrated from the measured governance
/// busy time, per-agent offered load held fixed, waits from Erlang-C with a
/// single governance server. Projected throughput scales the measured value
/// by the modeled per-request delay ratio; saturated targets carry no finite
/// delay.
std::vector<Projection> mmc_project(const MeasuredPoint& measured, const std::vector<int>& targets,
                                    int servers = 1, double contention = kDefaultContention);

}  // namespace trustgov::analytics
