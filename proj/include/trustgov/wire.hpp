#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trustgov/ledger.hpp"
#include "trustgov/pipeline.hpp"
#include "trustgov/policy.hpp"

namespace trustgov::wire {

/// Local compliance metadata carried with each submission.
struct ComplianceMeta {
  std::string domain;
  std::string schema_version = "1";
  std::string policy_digest;
};

/// One agent's signed per-round submission: the raw observation with its
/// digest plus one (r, t) report per candidate reasoner.
struct GovernancePacket {
  std::string agent_id;
  std::string domain;
  double timestamp = 0.0;
  pipeline::Observation observation;
  std::string observation_digest;  // hex, over the canonical observation
  std::vector<policy::CandidateReport> candidates;
  ComplianceMeta meta;
  std::string signature;  // hex, over the canonical packet sans signature
};

nlohmann::json to_json(const GovernancePacket& p);
GovernancePacket packet_from_json(const nlohmann::json& j);

/// Canonical bytes covered by the packet signature.
std::string packet_signing_payload(const GovernancePacket& p);
void sign_packet(GovernancePacket& p, const ledger::Signer& signer);
bool verify_packet(const GovernancePacket& p, const ledger::KeyRegistry& registry);

struct CandidateAssessment {
  std::string model_id;
  double r = 0.0;
  double t = 0.0;
  double mae = 0.0;
  bool admitted = false;
  std::optional<std::pair<double, double>> feedback;  // (dR, dT) issued to non-selected
};

struct EscalationFlags {
  bool joint_actuation = false;
  bool escalation_active = false;
  std::string escalation_action = "none";
  bool needs_human = false;
};

/// Per-agent governance outcome for one round; the payload anchored on the
/// governance chain is the canonical JSON of this record.
struct DecisionRecord {
  std::uint64_t round = 0;
  std::string agent_id;
  std::string domain;
  double timestamp = 0.0;

  bool rejected = false;
  std::string reject_reason;

  double r_ref = 0.0;
  double t_ref = 0.0;
  std::vector<CandidateAssessment> candidates;
  std::optional<std::string> selected_model;
  bool used_fallback = false;
  bool unresolved = false;

  std::optional<std::string> partner_domain;  // consulted cross-domain partner
  std::optional<std::string> action;          // actuation requested this round
  std::optional<policy::Decision> decision;

  EscalationFlags flags;
};

nlohmann::json to_json(const DecisionRecord& r);
DecisionRecord record_from_json(const nlohmann::json& j);

/// Canonical serialization anchored on the governance chain.
std::string record_chain_payload(const DecisionRecord& r);

// Line-delimited framing: one self-describing JSON object per line, UTF-8.
void write_jsonl(std::ostream& out, const nlohmann::json& j);
std::vector<GovernancePacket> read_packets_jsonl(std::istream& in);
std::vector<DecisionRecord> read_records_jsonl(std::istream& in);

}  // namespace trustgov::wire
