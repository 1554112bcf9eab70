#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trustgov/metrics.hpp"

namespace trustgov::policy {

enum class Verdict { approve, restrict, deny };

enum class Reason {
  admitted,
  trust_below_theta,
  low_trust_restrict,
  high_risk_restrict,
  cross_domain_violation,
};

struct Decision {
  Verdict verdict = Verdict::deny;
  Reason reason = Reason::trust_below_theta;
};

const char* to_string(Verdict v);
const char* to_string(Reason r);

/// One candidate reasoner's (risk, trust) report for a round.
struct CandidateReport {
  std::string model_id;
  double r = 0.0;
  double t = 0.0;
};

/// Governance-side reference values the candidates are judged against.
struct Reference {
  double r = 0.0;
  double t = 0.0;
};

enum class Cmp { greater, greater_equal, less };

/// Domain alert rule: a conjunction over (risk, trust) with the comparison
/// operators kept exactly as configured (mixed strict/inclusive).
struct DomainTrigger {
  Cmp risk_op = Cmp::greater;
  double risk_threshold = 0.0;
  Cmp trust_op = Cmp::less;
  double trust_threshold = 0.0;
};

/// Cross-domain actuation rule: the named action is permitted only when every
/// partner domain has an admitted report this round and its trigger is quiet.
struct ActionRule {
  std::string action;
  std::vector<std::string> partner_domains;
};

/// Every threshold, tolerance, weight and timing constant of the governance
/// policy matrix. The defaults reproduce the shipped policy table; everything
/// is loadable from a JSON config keyed by policy id.
struct PolicyMatrix {
  // S1 admission gate
  double eps_r = 0.07;
  double eps_t = 0.05;
  std::map<std::string, double> tau_t = {{"weather", 0.60}, {"traffic", 0.55}, {"fire", 0.65}};

  // S2 selection
  double tie_tolerance = 0.01;
  std::string fallback_domain = "fire";

  // S3 feedback
  double feedback_factor = 0.5;

  // decision thresholds
  double theta_t = 0.5;         // deny below this trust
  double theta_r = 0.8;         // restrict above this risk
  double restrict_trust = 0.7;  // restrict below this trust

  // S4 cross-agent actuation
  double joint_risk_trigger = 0.80;
  int joint_min_agents = 2;

  // S5 ecosystem escalation
  double eco_risk_trigger = 0.70;
  double eco_trust_floor = 0.60;

  // S6 stability
  double hysteresis = 0.05;
  double cooldown_s = 900.0;

  // W1 / T1 / F1
  std::map<std::string, DomainTrigger> domain_triggers = {
      {"weather", {Cmp::greater, 0.60, Cmp::less, 0.65}},
      {"traffic", {Cmp::greater_equal, 0.95, Cmp::less, 0.65}},
      {"fire", {Cmp::greater_equal, 0.95, Cmp::greater, 0.65}},
  };

  // Cross-domain actuation rules, keyed by the initiating domain.
  std::map<std::string, ActionRule> action_rules = {
      {"traffic", {"reroute", {"weather"}}},
  };

  static PolicyMatrix defaults() { return {}; }
  static PolicyMatrix load(const std::filesystem::path& config_path);

  /// Domain trust baseline; unknown domain is a configuration error.
  double tau(const std::string& domain) const;

  void validate() const;
};

/// Canonical JSON form, readable back by PolicyMatrix::load.
std::string policy_to_json(const PolicyMatrix& matrix);

/// Hex SHA-256 of the canonical form; carried in packet compliance metadata.
std::string policy_digest(const PolicyMatrix& matrix);

/// Mean absolute error between a candidate report and the reference:
/// half the sum of the absolute risk and trust deviations.
double mae(const CandidateReport& candidate, const Reference& reference);

/// S1 gate: |dR| <= eps_r, |dT| <= eps_t and T >= tau(domain), all inclusive.
bool admit(const CandidateReport& candidate, const Reference& reference,
           const std::string& domain, const PolicyMatrix& matrix);

struct Selection {
  std::string model_id;
  bool used_fallback = false;
};

/// S2: among admitted candidates the highest trust wins; trust ties within
/// tie_tolerance fall back to min |dR|, remaining exact ties to ascending
/// model_id. When nothing is admitted, the fallback domain picks the
/// candidate nearest above tau (else nearest to tau); other domains return
/// no selection.
std::optional<Selection> select(const std::vector<CandidateReport>& candidates,
                                const Reference& reference, const std::string& domain,
                                const PolicyMatrix& matrix);

/// S3: move a candidate half an error step toward the reference, clipped to [0,1].
CandidateReport feedback(const CandidateReport& candidate, const Reference& reference,
                         double factor = 0.5);

/// Threshold verdict: deny below theta_t (or on cross-domain violation),
/// restrict below restrict_trust or above theta_r, approve otherwise.
Decision decide(double r, double t, const PolicyMatrix& matrix, bool cross_domain_ok = true);

/// Evaluate the domain's alert conjunction with its configured operators.
bool domain_trigger(const std::string& domain, double r, double t, const PolicyMatrix& matrix);

/// S4: true when at least joint_min_agents have r_overall strictly above the trigger.
bool joint_actuation(const std::vector<metrics::AgentRiskTrust>& agents,
                     const PolicyMatrix& matrix);

struct CrossDomainAction {
  std::string action;
  std::vector<std::string> partner_domains;
};

/// Cross-domain clause: every partner domain must have an admitted report in
/// the current round and its domain trigger must be inactive. Actions with no
/// partners pass vacuously.
bool cross_domain_ok(const CrossDomainAction& action,
                     const std::map<std::string, metrics::AgentRiskTrust>& admitted_by_domain,
                     const PolicyMatrix& matrix);

}  // namespace trustgov::policy
