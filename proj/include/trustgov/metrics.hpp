#pragma once

#include <set>
#include <string>
#include <variant>
#include <vector>

namespace trustgov::metrics {

/// One continuous indicator: observed value against its baseline and
/// tolerance band, all in the indicator's native units.
struct Indicator {
  double value = 0.0;
  double baseline = 0.0;
  double tolerance = 0.0;  // >= 0
};

struct ContinuousSignals {
  std::vector<Indicator> indicators;  // nonempty
};

struct CapacityObservation {
  double load = 0.0;                // >= 0
  double capacity_threshold = 1.0;  // > 0, same units as load
};

struct HazardObservation {
  int event_count = 0;  // >= 0
};

using EnvInput = std::variant<ContinuousSignals, CapacityObservation, HazardObservation>;

/// Smoothing constants for history-reputation trust.
struct HrtParams {
  double alpha = 0.5;  // weight of the success signal, also the t0 seed
  double beta = 0.5;   // weight of peer reputation
  double delta = 0.85; // forgetting factor
};

/// One candidate's outcome for peer-reputation scoring.
struct CandidateOutcome {
  double confidence = 0.0;  // in [0,1]
  std::string output_label;
  bool is_best = false;  // label matches the consensus-best output
};

/// Multiplicative context modifier applied to the trust baseline.
struct ContextModifier {
  double value = 1.0;   // in (0, kModifierCap]
  double weight = 1.0;  // >= 0
};

/// Full per-agent metric vector at one timestamp.
struct AgentRiskTrust {
  std::string agent_id;
  double timestamp = 0.0;  // simulated-clock seconds
  double r_env = 0.0;
  double r_service = 0.0;
  double r_overall = 0.0;
  double t_hrt = 0.0;
  double t_ctx = 0.0;
  double t_overall = 0.0;
  double lambda = 0.5;  // risk-blend weight used for r_overall
};

struct EcosystemSnapshot {
  double t_ecosystem = 0.0;  // mean of member t_overall
  double r_ecosystem = 0.0;  // max of member r_overall
  std::set<std::string> active_agent_ids;
};

constexpr double kInitialTrustSeed = 0.5;  // R_Service and T_Rept start here
constexpr double kModifierCap = 1.5;

/// Fraction of indicators outside their tolerance band (strict inequality;
/// boundary values count as in-tolerance).
double env_risk(const ContinuousSignals& signals);
/// 1 when load strictly exceeds the capacity threshold, else 0.
double env_risk(const CapacityObservation& obs);
/// 1 when at least one hazard event occurred, else 0.
double env_risk(const HazardObservation& obs);
double env_risk(const EnvInput& input);

/// Confidence-weighted fraction of candidates agreeing with the best output.
/// Empty or zero-mass input returns the 0.5 initialization value.
double reputation_trust(const std::vector<CandidateOutcome>& candidates);

/// Exponentially smoothed trust blending the previous value with the current
/// success signal and peer reputation. is_initial selects the t0 seed (alpha).
double hrt_update(double prev_t_hrt, int success, double t_rept, const HrtParams& params = {},
                  bool is_initial = false);

/// Complement of the previous round's history-reputation trust; 0.5 at t0.
double service_risk(double prev_t_hrt, bool is_initial = false);

/// lambda-weighted blend of environmental and service risk.
double overall_risk(double lambda, double r_env, double r_service);

/// Baseline confidence attenuated by weighted multiplicative modifiers,
/// clamped to 1.0. An empty modifier list returns the baseline.
double contextual_trust(double t_base, const std::vector<ContextModifier>& modifiers);

/// Risk-adaptive fusion of historical and contextual trust: the weight on the
/// contextual component grows with risk, w_hrt = 0.5 - 0.2 r, w_ctx = 0.5 + 0.2 r.
double overall_trust(double t_hrt, double t_ctx, double r_overall);

/// Mean trust / max risk across the active agents. Empty input is an error.
EcosystemSnapshot ecosystem_metrics(const std::vector<AgentRiskTrust>& agents);

}  // namespace trustgov::metrics
