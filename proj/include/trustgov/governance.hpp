#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trustgov/ledger.hpp"
#include "trustgov/pipeline.hpp"
#include "trustgov/policy.hpp"
#include "trustgov/wire.hpp"

namespace trustgov::gov {

struct EscalationState {
  bool active = false;
  std::optional<double> last_transition_s;  // unset until the first transition
  double trigger_metric_at_activation = 0.0;
};

enum class EscalationAction { none, escalate, escalate_needs_human, deactivate };

const char* to_string(EscalationAction a);

/// One step of the city-wide escalation controller. Activates when ecosystem
/// risk exceeds the trigger (needing human confirmation when ecosystem trust
/// sits below the floor); deactivates only when risk drops below
/// trigger - hysteresis; and any transition within the cooldown window is
/// suppressed, leaving the state unchanged.
std::pair<EscalationState, EscalationAction> escalation_step(const EscalationState& state,
                                                             double r_eco, double t_eco,
                                                             double now_s,
                                                             const policy::PolicyMatrix& matrix);

struct GovernanceCounters {
  std::uint64_t rounds = 0;
  std::uint64_t packets = 0;
  std::uint64_t admitted_packets = 0;
  std::uint64_t rejected_packets = 0;
  std::uint64_t records = 0;
  std::uint64_t selections = 0;
  std::uint64_t fallbacks = 0;
  std::uint64_t unresolved_rounds = 0;
  std::uint64_t feedback_pairs = 0;
  std::uint64_t joint_rounds = 0;
  std::uint64_t escalation_transitions = 0;
  std::uint64_t needs_human_events = 0;
};

/// The supervisory governance node: verifies packets, recomputes reference
/// metrics with its own per-agent trust state, runs gate -> select ->
/// feedback -> decide, evaluates cross-agent and ecosystem policies, and
/// anchors every record on the governance chain before the round completes.
class GovernanceNode {
 public:
  GovernanceNode(policy::PolicyMatrix matrix,
                 std::map<std::string, pipeline::DomainProfile> profiles,
                 ledger::KeyRegistry registry, ledger::Chain* chain);

  std::vector<wire::DecisionRecord> process_round(const std::vector<wire::GovernancePacket>& packets,
                                                  double now_s);

  /// Reference metrics for one observation, advancing the node's own
  /// per-agent HRT state. process_round calls this once per admitted packet.
  metrics::AgentRiskTrust compute_reference(const std::string& agent_id,
                                            const pipeline::Observation& obs);

  const EscalationState& escalation() const { return escalation_; }
  const GovernanceCounters& counters() const { return counters_; }
  const policy::PolicyMatrix& matrix() const { return matrix_; }

  /// Latest reference vector per agent with at least one admitted packet.
  const std::map<std::string, metrics::AgentRiskTrust>& latest_references() const {
    return latest_ref_;
  }

 private:
  struct AgentTrustState {
    pipeline::MetricState metrics;
    double last_timestamp = -std::numeric_limits<double>::infinity();
    bool prev_selected = false;
    std::vector<policy::CandidateReport> prev_reports;
    std::map<std::string, double> prev_mae;
    std::optional<std::string> prev_selected_model;
  };

  std::string validate_packet(const wire::GovernancePacket& p) const;  // empty = ok

  policy::PolicyMatrix matrix_;
  std::map<std::string, pipeline::DomainProfile> profiles_;
  ledger::KeyRegistry registry_;
  ledger::Chain* chain_ = nullptr;

  std::map<std::string, AgentTrustState> agents_;
  std::map<std::string, metrics::AgentRiskTrust> latest_ref_;
  EscalationState escalation_;
  GovernanceCounters counters_;
  std::uint64_t next_round_ = 0;
};

}  // namespace trustgov::gov
