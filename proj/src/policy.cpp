#include "trustgov/policy.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "trustgov/crypto.hpp"
#include "trustgov/util.hpp"

namespace trustgov::policy {

using util::ConfigError;
using util::require;
using util::require_unit;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::approve: return "approve";
    case Verdict::restrict: return "restrict";
    case Verdict::deny: return "deny";
  }
  return "?";
}

const char* to_string(Reason r) {
  switch (r) {
    case Reason::admitted: return "admitted";
    case Reason::trust_below_theta: return "trust-below-theta";
    case Reason::low_trust_restrict: return "low-trust-restrict";
    case Reason::high_risk_restrict: return "high-risk-restrict";
    case Reason::cross_domain_violation: return "cross-domain-violation";
  }
  return "?";
}

double PolicyMatrix::tau(const std::string& domain) const {
  auto it = tau_t.find(domain);
  if (it == tau_t.end()) throw ConfigError("no trust baseline configured for domain: " + domain);
  return it->second;
}

void PolicyMatrix::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must be in [0,1]");
  };
  unit(eps_r, "eps_r");
  unit(eps_t, "eps_t");
  unit(tie_tolerance, "tie_tolerance");
  unit(feedback_factor, "feedback_factor");
  unit(theta_t, "theta_t");
  unit(theta_r, "theta_r");
  unit(restrict_trust, "restrict_trust");
  unit(joint_risk_trigger, "joint_risk_trigger");
  unit(eco_risk_trigger, "eco_risk_trigger");
  unit(eco_trust_floor, "eco_trust_floor");
  unit(hysteresis, "hysteresis");
  for (const auto& [domain, tau] : tau_t) unit(tau, ("tau_t." + domain).c_str());
  if (cooldown_s <= 0.0) throw ConfigError("cooldown_s must be > 0");
  if (joint_min_agents < 1) throw ConfigError("joint_min_agents must be >= 1");
}

namespace {

Cmp parse_cmp(const std::string& op) {
  if (op == ">") return Cmp::greater;
  if (op == ">=") return Cmp::greater_equal;
  if (op == "<") return Cmp::less;
  throw ConfigError("unknown comparison operator: " + op);
}

bool eval_cmp(Cmp op, double value, double threshold) {
  switch (op) {
    case Cmp::greater: return value > threshold;
    case Cmp::greater_equal: return value >= threshold;
    case Cmp::less: return value < threshold;
  }
  return false;
}

DomainTrigger parse_trigger(const nlohmann::json& j) {
  DomainTrigger t;
  t.risk_op = parse_cmp(j.at("risk").at("op").get<std::string>());
  t.risk_threshold = j.at("risk").at("value").get<double>();
  t.trust_op = parse_cmp(j.at("trust").at("op").get<std::string>());
  t.trust_threshold = j.at("trust").at("value").get<double>();
  return t;
}

}  // namespace

PolicyMatrix PolicyMatrix::load(const std::filesystem::path& config_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("policy config parse error: " + std::string(e.what()));
  }

  PolicyMatrix m = defaults();
  if (j.contains("S1")) {
    const auto& s1 = j["S1"];
    if (s1.contains("eps_r")) m.eps_r = s1["eps_r"].get<double>();
    if (s1.contains("eps_t")) m.eps_t = s1["eps_t"].get<double>();
    if (s1.contains("tau_t")) {
      m.tau_t.clear();
      for (const auto& [domain, v] : s1["tau_t"].items()) m.tau_t[domain] = v.get<double>();
    }
  }
  if (j.contains("S2")) {
    const auto& s2 = j["S2"];
    if (s2.contains("tie_tolerance")) m.tie_tolerance = s2["tie_tolerance"].get<double>();
    if (s2.contains("fallback_domain")) m.fallback_domain = s2["fallback_domain"].get<std::string>();
  }
  if (j.contains("S3") && j["S3"].contains("feedback_factor"))
    m.feedback_factor = j["S3"]["feedback_factor"].get<double>();
  if (j.contains("S4")) {
    const auto& s4 = j["S4"];
    if (s4.contains("joint_risk_trigger")) m.joint_risk_trigger = s4["joint_risk_trigger"].get<double>();
    if (s4.contains("min_agents")) m.joint_min_agents = s4["min_agents"].get<int>();
  }
  if (j.contains("S5")) {
    const auto& s5 = j["S5"];
    if (s5.contains("eco_risk_trigger")) m.eco_risk_trigger = s5["eco_risk_trigger"].get<double>();
    if (s5.contains("eco_trust_floor")) m.eco_trust_floor = s5["eco_trust_floor"].get<double>();
  }
  if (j.contains("S6")) {
    const auto& s6 = j["S6"];
    if (s6.contains("hysteresis")) m.hysteresis = s6["hysteresis"].get<double>();
    if (s6.contains("cooldown_s")) m.cooldown_s = s6["cooldown_s"].get<double>();
  }
  if (j.contains("decision")) {
    const auto& d = j["decision"];
    if (d.contains("theta_t")) m.theta_t = d["theta_t"].get<double>();
    if (d.contains("theta_r")) m.theta_r = d["theta_r"].get<double>();
    if (d.contains("restrict_trust")) m.restrict_trust = d["restrict_trust"].get<double>();
  }
  for (const auto& id : {"W1", "T1", "F1"}) {
    if (!j.contains(id)) continue;
    const auto& entry = j[id];
    m.domain_triggers[entry.at("domain").get<std::string>()] = parse_trigger(entry);
  }
  if (j.contains("triggers")) {  // additional domains beyond W1/T1/F1
    for (const auto& [domain, entry] : j["triggers"].items())
      m.domain_triggers[domain] = parse_trigger(entry);
  }
  if (j.contains("cross_domain")) {
    m.action_rules.clear();
    for (const auto& [domain, entry] : j["cross_domain"].items()) {
      ActionRule rule;
      rule.action = entry.at("action").get<std::string>();
      for (const auto& p : entry.at("partners")) rule.partner_domains.push_back(p.get<std::string>());
      m.action_rules[domain] = rule;
    }
  }

  m.validate();
  return m;
}

namespace {

std::string cmp_to_string(Cmp op) {
  switch (op) {
    case Cmp::greater: return ">";
    case Cmp::greater_equal: return ">=";
    case Cmp::less: return "<";
  }
  return "?";
}

nlohmann::json trigger_to_json(const DomainTrigger& t) {
  return {{"risk", {{"op", cmp_to_string(t.risk_op)}, {"value", t.risk_threshold}}},
          {"trust", {{"op", cmp_to_string(t.trust_op)}, {"value", t.trust_threshold}}}};
}

}  // namespace

std::string policy_to_json(const PolicyMatrix& m) {
  nlohmann::json j;
  j["S1"] = {{"eps_r", m.eps_r}, {"eps_t", m.eps_t}, {"tau_t", m.tau_t}};
  j["S2"] = {{"tie_tolerance", m.tie_tolerance}, {"fallback_domain", m.fallback_domain}};
  j["S3"] = {{"feedback_factor", m.feedback_factor}};
  j["S4"] = {{"joint_risk_trigger", m.joint_risk_trigger}, {"min_agents", m.joint_min_agents}};
  j["S5"] = {{"eco_risk_trigger", m.eco_risk_trigger}, {"eco_trust_floor", m.eco_trust_floor}};
  j["S6"] = {{"hysteresis", m.hysteresis}, {"cooldown_s", m.cooldown_s}};
  j["decision"] = {{"theta_t", m.theta_t},
                   {"theta_r", m.theta_r},
                   {"restrict_trust", m.restrict_trust}};
  nlohmann::json triggers;
  for (const auto& [domain, trig] : m.domain_triggers) triggers[domain] = trigger_to_json(trig);
  j["triggers"] = triggers;
  nlohmann::json cross;
  for (const auto& [domain, rule] : m.action_rules)
    cross[domain] = {{"action", rule.action}, {"partners", rule.partner_domains}};
  j["cross_domain"] = cross;
  return j.dump(2) + "\n";
}

std::string policy_digest(const PolicyMatrix& m) {
  auto digest = crypto::sha256(policy_to_json(m));
  return crypto::to_hex(digest);
}

double mae(const CandidateReport& candidate, const Reference& reference) {
  require_unit(candidate.r, "mae: candidate r");
  require_unit(candidate.t, "mae: candidate t");
  require_unit(reference.r, "mae: reference r");
  require_unit(reference.t, "mae: reference t");
  return 0.5 * (std::abs(candidate.r - reference.r) + std::abs(candidate.t - reference.t));
}

bool admit(const CandidateReport& candidate, const Reference& reference,
           const std::string& domain, const PolicyMatrix& matrix) {
  double tau = matrix.tau(domain);
  return std::abs(candidate.r - reference.r) <= matrix.eps_r &&
         std::abs(candidate.t - reference.t) <= matrix.eps_t && candidate.t >= tau;
}

std::optional<Selection> select(const std::vector<CandidateReport>& candidates,
                                const Reference& reference, const std::string& domain,
                                const PolicyMatrix& matrix) {
  require(!candidates.empty(), "select: empty candidate list");

  std::vector<const CandidateReport*> admitted;
  for (const auto& c : candidates)
    if (admit(c, reference, domain, matrix)) admitted.push_back(&c);

  if (!admitted.empty()) {
    double max_t = (*std::max_element(admitted.begin(), admitted.end(),
                                      [](auto* a, auto* b) { return a->t < b->t; }))
                       ->t;
    const CandidateReport* best = nullptr;
    for (const auto* c : admitted) {
      if (c->t < max_t - matrix.tie_tolerance) continue;
      if (!best) {
        best = c;
        continue;
      }
      double dr_c = std::abs(c->r - reference.r);
      double dr_best = std::abs(best->r - reference.r);
      if (dr_c < dr_best || (dr_c == dr_best && c->model_id < best->model_id)) best = c;
    }
    return Selection{best->model_id, false};
  }

  if (domain != matrix.fallback_domain) return std::nullopt;

  // Fallback: prefer the candidate nearest above the domain baseline,
  // otherwise nearest to it.
  double tau = matrix.tau(domain);
  const CandidateReport* best = nullptr;
  double best_key = 0.0;
  bool have_above = false;
  for (const auto& c : candidates) {
    bool above = c.t >= tau;
    double key = above ? c.t - tau : std::abs(c.t - tau);
    if (have_above && !above) continue;
    bool replace = !best || (above && !have_above) || key < best_key ||
                   (key == best_key && c.model_id < best->model_id);
    if (replace) {
      best = &c;
      best_key = key;
      have_above = above;
    }
  }
  return Selection{best->model_id, true};
}

CandidateReport feedback(const CandidateReport& candidate, const Reference& reference,
                         double factor) {
  require_unit(factor, "feedback: factor");
  CandidateReport out = candidate;
  out.r = std::clamp(candidate.r + factor * (reference.r - candidate.r), 0.0, 1.0);
  out.t = std::clamp(candidate.t + factor * (reference.t - candidate.t), 0.0, 1.0);
  return out;
}

Decision decide(double r, double t, const PolicyMatrix& matrix, bool cross_domain_ok) {
  require_unit(r, "decide: r");
  require_unit(t, "decide: t");
  if (!cross_domain_ok) return {Verdict::deny, Reason::cross_domain_violation};
  if (t < matrix.theta_t) return {Verdict::deny, Reason::trust_below_theta};
  if (t < matrix.restrict_trust) return {Verdict::restrict, Reason::low_trust_restrict};
  if (r > matrix.theta_r) return {Verdict::restrict, Reason::high_risk_restrict};
  return {Verdict::approve, Reason::admitted};
}

bool domain_trigger(const std::string& domain, double r, double t, const PolicyMatrix& matrix) {
  auto it = matrix.domain_triggers.find(domain);
  if (it == matrix.domain_triggers.end())
    throw ConfigError("no trigger configured for domain: " + domain);
  const DomainTrigger& trig = it->second;
  return eval_cmp(trig.risk_op, r, trig.risk_threshold) &&
         eval_cmp(trig.trust_op, t, trig.trust_threshold);
}

bool joint_actuation(const std::vector<metrics::AgentRiskTrust>& agents,
                     const PolicyMatrix& matrix) {
  int high_risk = 0;
  for (const auto& a : agents)
    if (a.r_overall > matrix.joint_risk_trigger) ++high_risk;
  return high_risk >= matrix.joint_min_agents;
}

bool cross_domain_ok(const CrossDomainAction& action,
                     const std::map<std::string, metrics::AgentRiskTrust>& admitted_by_domain,
                     const PolicyMatrix& matrix) {
  for (const auto& partner : action.partner_domains) {
    auto it = admitted_by_domain.find(partner);
    if (it == admitted_by_domain.end()) return false;  // missing partner state
    if (domain_trigger(partner, it->second.r_overall, it->second.t_overall, matrix)) return false;
  }
  return true;
}

}  // namespace trustgov::policy
