#include "trustgov/governance.hpp"

#include <algorithm>
#include <set>

#include "trustgov/util.hpp"

namespace trustgov::gov {

const char* to_string(EscalationAction a) {
  switch (a) {
    case EscalationAction::none: return "none";
    case EscalationAction::escalate: return "escalate";
    case EscalationAction::escalate_needs_human: return "escalate-needs-human";
    case EscalationAction::deactivate: return "deactivate";
  }
  return "?";
}

std::pair<EscalationState, EscalationAction> escalation_step(const EscalationState& state,
                                                             double r_eco, double t_eco,
                                                             double now_s,
                                                             const policy::PolicyMatrix& matrix) {
  util::require_unit(r_eco, "escalation_step: r_eco");
  util::require_unit(t_eco, "escalation_step: t_eco");
  if (state.last_transition_s)
    util::require(now_s >= *state.last_transition_s, "escalation_step: clock went backwards");

  bool cooldown_ok =
      !state.last_transition_s || (now_s - *state.last_transition_s >= matrix.cooldown_s);

  if (!state.active) {
    if (r_eco > matrix.eco_risk_trigger && cooldown_ok) {
      EscalationState next = state;
      next.active = true;
      next.last_transition_s = now_s;
      next.trigger_metric_at_activation = r_eco;
      return {next, t_eco >= matrix.eco_trust_floor ? EscalationAction::escalate
                                                    : EscalationAction::escalate_needs_human};
    }
    return {state, EscalationAction::none};
  }

  // Active: hysteresis guards the deactivation edge only.
  if (r_eco < matrix.eco_risk_trigger - matrix.hysteresis && cooldown_ok) {
    EscalationState next = state;
    next.active = false;
    next.last_transition_s = now_s;
    return {next, EscalationAction::deactivate};
  }
  return {state, EscalationAction::none};
}

GovernanceNode::GovernanceNode(policy::PolicyMatrix matrix,
                               std::map<std::string, pipeline::DomainProfile> profiles,
                               ledger::KeyRegistry registry, ledger::Chain* chain)
    : matrix_(std::move(matrix)),
      profiles_(std::move(profiles)),
      registry_(std::move(registry)),
      chain_(chain) {
  matrix_.validate();
}

std::string GovernanceNode::validate_packet(const wire::GovernancePacket& p) const {
  if (!registry_.known(p.agent_id)) return "unknown-agent";
  if (!wire::verify_packet(p, registry_)) return "bad-signature";
  if (p.candidates.empty()) return "no-candidates";
  if (profiles_.find(p.domain) == profiles_.end()) return "unknown-domain";
  if (p.domain != p.observation.domain || p.domain != p.meta.domain) return "domain-mismatch";
  if (pipeline::observation_digest_hex(p.observation) != p.observation_digest)
    return "digest-mismatch";
  auto it = agents_.find(p.agent_id);
  if (it != agents_.end() && p.timestamp < it->second.last_timestamp) return "stale-timestamp";
  for (const auto& c : p.candidates)
    if (!(c.r >= 0.0 && c.r <= 1.0 && c.t >= 0.0 && c.t <= 1.0)) return "out-of-range-candidate";
  return "";
}

metrics::AgentRiskTrust GovernanceNode::compute_reference(const std::string& agent_id,
                                                          const pipeline::Observation& obs) {
  auto pit = profiles_.find(obs.domain);
  if (pit == profiles_.end()) throw util::ConfigError("no profile for domain: " + obs.domain);
  AgentTrustState& st = agents_[agent_id];

  pipeline::RoundInputs inputs;
  inputs.selected = st.prev_selected;
  inputs.reputation = pipeline::reputation_inputs(st.prev_reports, st.prev_selected_model,
                                                  st.prev_mae, matrix_.eps_r, matrix_.eps_t);
  return pipeline::advance(st.metrics, pit->second, obs, inputs, agent_id);
}

std::vector<wire::DecisionRecord> GovernanceNode::process_round(
    const std::vector<wire::GovernancePacket>& packets, double now_s) {
  std::uint64_t round = next_round_++;
  counters_.rounds += 1;

  struct Working {
    const wire::GovernancePacket* packet = nullptr;
    wire::DecisionRecord record;
    metrics::AgentRiskTrust ref;
    bool ok = false;
  };
  std::vector<Working> work(packets.size());

  // Pass 1: ingress checks and reference computation, so the cross-domain
  // clause in pass 2 can see every admitted report of the round.
  std::map<std::string, metrics::AgentRiskTrust> round_refs;
  std::set<std::string> seen_agents;
  for (std::size_t i = 0; i < packets.size(); ++i) {
    const auto& p = packets[i];
    auto& w = work[i];
    w.packet = &p;
    w.record.round = round;
    w.record.agent_id = p.agent_id;
    w.record.domain = p.domain;
    w.record.timestamp = p.timestamp;
    counters_.packets += 1;

    std::string reason = validate_packet(p);
    if (reason.empty() && !seen_agents.insert(p.agent_id).second)
      reason = "duplicate-in-round";  // a round carries at most one packet per agent
    if (!reason.empty()) {
      w.record.rejected = true;
      w.record.reject_reason = reason;
      counters_.rejected_packets += 1;
      continue;
    }

    w.ref = compute_reference(p.agent_id, p.observation);
    agents_[p.agent_id].last_timestamp = p.timestamp;
    round_refs[p.domain] = w.ref;
    w.ok = true;
    counters_.admitted_packets += 1;
  }

  // Pass 2: gate, select, feedback, decide.
  for (auto& w : work) {
    if (!w.ok) continue;
    const auto& p = *w.packet;
    policy::Reference ref{w.ref.r_overall, w.ref.t_overall};
    w.record.r_ref = ref.r;
    w.record.t_ref = ref.t;

    auto selection = policy::select(p.candidates, ref, p.domain, matrix_);
    const policy::CandidateReport* selected_report = nullptr;
    if (selection) {
      w.record.selected_model = selection->model_id;
      w.record.used_fallback = selection->used_fallback;
      counters_.selections += 1;
      if (selection->used_fallback) counters_.fallbacks += 1;
      for (const auto& c : p.candidates)
        if (c.model_id == selection->model_id) selected_report = &c;
    } else {
      w.record.unresolved = true;
      counters_.unresolved_rounds += 1;
    }

    for (const auto& c : p.candidates) {
      wire::CandidateAssessment a;
      a.model_id = c.model_id;
      a.r = c.r;
      a.t = c.t;
      a.mae = policy::mae(c, ref);
      a.admitted = policy::admit(c, ref, p.domain, matrix_);
      bool is_selected = selection && c.model_id == selection->model_id;
      if (!is_selected) {
        a.feedback = std::make_pair(ref.r - c.r, ref.t - c.t);
        counters_.feedback_pairs += 1;
      }
      w.record.candidates.push_back(std::move(a));
    }

    // Cross-domain clause: evaluated when the domain's trigger requests its
    // configured actuation this round.
    bool cross_ok = true;
    auto rule_it = matrix_.action_rules.find(p.domain);
    if (rule_it != matrix_.action_rules.end() &&
        policy::domain_trigger(p.domain, ref.r, ref.t, matrix_)) {
      w.record.action = rule_it->second.action;
      if (!rule_it->second.partner_domains.empty())
        w.record.partner_domain = rule_it->second.partner_domains.front();
      cross_ok = policy::cross_domain_ok({rule_it->second.action, rule_it->second.partner_domains},
                                         round_refs, matrix_);
    }

    if (selected_report)
      w.record.decision = policy::decide(selected_report->r, selected_report->t, matrix_, cross_ok);

    // Stash the round outcome; it feeds the next round's success signal and
    // peer-reputation inputs.
    AgentTrustState& st = agents_[p.agent_id];
    st.prev_reports = p.candidates;
    st.prev_mae.clear();
    for (const auto& a : w.record.candidates) st.prev_mae[a.model_id] = a.mae;
    st.prev_selected_model = w.record.selected_model;
    st.prev_selected = w.record.selected_model.has_value();
  }

  // Round-level policies over the latest reference per agent; rejected
  // packets never reach this map.
  for (const auto& w : work)
    if (w.ok) latest_ref_[w.record.agent_id] = w.ref;

  wire::EscalationFlags flags;
  if (!latest_ref_.empty()) {
    std::vector<metrics::AgentRiskTrust> current;
    current.reserve(latest_ref_.size());
    for (const auto& [id, ref] : latest_ref_) current.push_back(ref);

    flags.joint_actuation = policy::joint_actuation(current, matrix_);
    if (flags.joint_actuation) counters_.joint_rounds += 1;

    auto eco = metrics::ecosystem_metrics(current);
    auto [next_state, action] =
        escalation_step(escalation_, eco.r_ecosystem, eco.t_ecosystem, now_s, matrix_);
    escalation_ = next_state;
    flags.escalation_active = escalation_.active;
    flags.escalation_action = to_string(action);
    flags.needs_human = action == EscalationAction::escalate_needs_human;
    if (action != EscalationAction::none) counters_.escalation_transitions += 1;
    if (flags.needs_human) counters_.needs_human_events += 1;
  }

  std::vector<wire::DecisionRecord> records;
  records.reserve(work.size());
  for (auto& w : work) {
    if (!w.record.rejected) w.record.flags = flags;
    if (chain_) chain_->append(wire::record_chain_payload(w.record), now_s);
    counters_.records += 1;
    records.push_back(std::move(w.record));
  }
  return records;
}

}  // namespace trustgov::gov
