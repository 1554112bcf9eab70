#include "trustgov/wire.hpp"

#include "trustgov/crypto.hpp"
#include "trustgov/util.hpp"

namespace trustgov::wire {

nlohmann::json to_json(const GovernancePacket& p) {
  nlohmann::json j;
  j["agent_id"] = p.agent_id;
  j["domain"] = p.domain;
  j["timestamp"] = p.timestamp;
  j["observation"] = pipeline::to_json(p.observation);
  j["observation_digest"] = p.observation_digest;
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : p.candidates)
    cands.push_back({{"model_id", c.model_id}, {"r", c.r}, {"t", c.t}});
  j["candidates"] = cands;
  j["meta"] = {{"domain", p.meta.domain},
               {"schema_version", p.meta.schema_version},
               {"policy_digest", p.meta.policy_digest}};
  if (!p.signature.empty()) j["signature"] = p.signature;
  return j;
}

GovernancePacket packet_from_json(const nlohmann::json& j) {
  GovernancePacket p;
  p.agent_id = j.at("agent_id").get<std::string>();
  p.domain = j.at("domain").get<std::string>();
  p.timestamp = j.at("timestamp").get<double>();
  p.observation = pipeline::observation_from_json(j.at("observation"));
  p.observation_digest = j.at("observation_digest").get<std::string>();
  for (const auto& c : j.at("candidates")) {
    p.candidates.push_back({c.at("model_id").get<std::string>(), c.at("r").get<double>(),
                            c.at("t").get<double>()});
  }
  if (j.contains("meta")) {
    const auto& m = j["meta"];
    p.meta.domain = m.value("domain", "");
    p.meta.schema_version = m.value("schema_version", "1");
    p.meta.policy_digest = m.value("policy_digest", "");
  }
  p.signature = j.value("signature", "");
  return p;
}

std::string packet_signing_payload(const GovernancePacket& p) {
  GovernancePacket unsigned_copy = p;
  unsigned_copy.signature.clear();
  return to_json(unsigned_copy).dump();
}

void sign_packet(GovernancePacket& p, const ledger::Signer& signer) {
  auto payload = packet_signing_payload(p);
  auto sig = signer.sign(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()));
  p.signature = crypto::to_hex(sig);
}

bool verify_packet(const GovernancePacket& p, const ledger::KeyRegistry& registry) {
  if (p.signature.empty()) return false;
  std::vector<std::uint8_t> sig;
  try {
    sig = crypto::from_hex(p.signature);
  } catch (const std::exception&) {
    return false;
  }
  auto payload = packet_signing_payload(p);
  return registry.verify(p.agent_id,
                         std::span<const std::uint8_t>(
                             reinterpret_cast<const std::uint8_t*>(payload.data()), payload.size()),
                         std::span<const std::uint8_t>(sig.data(), sig.size()));
}

nlohmann::json to_json(const DecisionRecord& r) {
  nlohmann::json j;
  j["round"] = r.round;
  j["agent_id"] = r.agent_id;
  j["domain"] = r.domain;
  j["timestamp"] = r.timestamp;
  j["rejected"] = r.rejected;
  if (r.rejected) {
    j["reject_reason"] = r.reject_reason;
    return j;
  }
  j["r_ref"] = r.r_ref;
  j["t_ref"] = r.t_ref;
  nlohmann::json cands = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    nlohmann::json cj = {{"model_id", c.model_id}, {"r", c.r},
                         {"t", c.t},               {"mae", c.mae},
                         {"admitted", c.admitted}};
    if (c.feedback) cj["feedback"] = {{"dr", c.feedback->first}, {"dt", c.feedback->second}};
    cands.push_back(cj);
  }
  j["candidates"] = cands;
  if (r.selected_model) j["selected_model"] = *r.selected_model;
  j["used_fallback"] = r.used_fallback;
  j["unresolved"] = r.unresolved;
  if (r.partner_domain) j["partner_domain"] = *r.partner_domain;
  if (r.action) j["action"] = *r.action;
  if (r.decision) {
    j["verdict"] = policy::to_string(r.decision->verdict);
    j["reason"] = policy::to_string(r.decision->reason);
  }
  j["flags"] = {{"joint_actuation", r.flags.joint_actuation},
                {"escalation_active", r.flags.escalation_active},
                {"escalation_action", r.flags.escalation_action},
                {"needs_human", r.flags.needs_human}};
  return j;
}

namespace {

policy::Verdict verdict_from_string(const std::string& s) {
  if (s == "approve") return policy::Verdict::approve;
  if (s == "restrict") return policy::Verdict::restrict;
  if (s == "deny") return policy::Verdict::deny;
  throw util::InputError("unknown verdict: " + s);
}

policy::Reason reason_from_string(const std::string& s) {
  if (s == "admitted") return policy::Reason::admitted;
  if (s == "trust-below-theta") return policy::Reason::trust_below_theta;
  if (s == "low-trust-restrict") return policy::Reason::low_trust_restrict;
  if (s == "high-risk-restrict") return policy::Reason::high_risk_restrict;
  if (s == "cross-domain-violation") return policy::Reason::cross_domain_violation;
  throw util::InputError("unknown reason: " + s);
}

}  // namespace

DecisionRecord record_from_json(const nlohmann::json& j) {
  DecisionRecord r;
  r.round = j.at("round").get<std::uint64_t>();
  r.agent_id = j.at("agent_id").get<std::string>();
  r.domain = j.at("domain").get<std::string>();
  r.timestamp = j.at("timestamp").get<double>();
  r.rejected = j.value("rejected", false);
  if (r.rejected) {
    r.reject_reason = j.value("reject_reason", "");
    return r;
  }
  r.r_ref = j.at("r_ref").get<double>();
  r.t_ref = j.at("t_ref").get<double>();
  for (const auto& cj : j.at("candidates")) {
    CandidateAssessment c;
    c.model_id = cj.at("model_id").get<std::string>();
    c.r = cj.at("r").get<double>();
    c.t = cj.at("t").get<double>();
    c.mae = cj.at("mae").get<double>();
    c.admitted = cj.at("admitted").get<bool>();
    if (cj.contains("feedback"))
      c.feedback = {cj["feedback"].at("dr").get<double>(), cj["feedback"].at("dt").get<double>()};
    r.candidates.push_back(std::move(c));
  }
  if (j.contains("selected_model")) r.selected_model = j["selected_model"].get<std::string>();
  r.used_fallback = j.value("used_fallback", false);
  r.unresolved = j.value("unresolved", false);
  if (j.contains("partner_domain")) r.partner_domain = j["partner_domain"].get<std::string>();
  if (j.contains("action")) r.action = j["action"].get<std::string>();
  if (j.contains("verdict")) {
    r.decision = policy::Decision{verdict_from_string(j["verdict"].get<std::string>()),
                                  reason_from_string(j["reason"].get<std::string>())};
  }
  if (j.contains("flags")) {
    const auto& f = j["flags"];
    r.flags.joint_actuation = f.value("joint_actuation", false);
    r.flags.escalation_active = f.value("escalation_active", false);
    r.flags.escalation_action = f.value("escalation_action", "none");
    r.flags.needs_human = f.value("needs_human", false);
  }
  return r;
}

std::string record_chain_payload(const DecisionRecord& r) { return to_json(r).dump(); }

void write_jsonl(std::ostream& out, const nlohmann::json& j) { out << j.dump() << '\n'; }

std::vector<GovernancePacket> read_packets_jsonl(std::istream& in) {
  std::vector<GovernancePacket> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(packet_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

std::vector<DecisionRecord> read_records_jsonl(std::istream& in) {
  std::vector<DecisionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace trustgov::wire
