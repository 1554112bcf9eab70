#include "trustgov/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "trustgov/util.hpp"

namespace trustgov::metrics {

using util::require;
using util::require_unit;

double env_risk(const ContinuousSignals& signals) {
  require(!signals.indicators.empty(), "env_risk: empty indicator list");
  std::size_t out_of_band = 0;
  for (const auto& ind : signals.indicators) {
    require(ind.tolerance >= 0.0, "env_risk: negative tolerance");
    if (std::abs(ind.value - ind.baseline) > ind.tolerance) ++out_of_band;
  }
  return static_cast<double>(out_of_band) / static_cast<double>(signals.indicators.size());
}

double env_risk(const CapacityObservation& obs) {
  require(obs.capacity_threshold > 0.0, "env_risk: capacity threshold must be > 0");
  require(obs.load >= 0.0, "env_risk: negative load");
  return obs.load > obs.capacity_threshold ? 1.0 : 0.0;
}

double env_risk(const HazardObservation& obs) {
  require(obs.event_count >= 0, "env_risk: negative event count");
  return obs.event_count >= 1 ? 1.0 : 0.0;
}

double env_risk(const EnvInput& input) {
  return std::visit([](const auto& v) { return env_risk(v); }, input);
}

double reputation_trust(const std::vector<CandidateOutcome>& candidates) {
  double mass = 0.0;
  double agreeing = 0.0;
  for (const auto& c : candidates) {
    require_unit(c.confidence, "reputation_trust: confidence");
    mass += c.confidence;
    if (c.is_best) agreeing += c.confidence;
  }
  if (mass <= 0.0) return kInitialTrustSeed;  // t0 convention, keeps pipelines total
  return agreeing / mass;
}

double hrt_update(double prev_t_hrt, int success, double t_rept, const HrtParams& params,
                  bool is_initial) {
  require(success == 0 || success == 1, "hrt_update: success must be 0 or 1");
  require_unit(params.alpha, "hrt_update: alpha");
  require_unit(params.beta, "hrt_update: beta");
  require_unit(params.delta, "hrt_update: delta");
  if (is_initial) return params.alpha;
  require_unit(prev_t_hrt, "hrt_update: prev_t_hrt");
  require_unit(t_rept, "hrt_update: t_rept");
  return params.delta * prev_t_hrt +
         (1.0 - params.delta) * (params.alpha * success + params.beta * t_rept);
}

double service_risk(double prev_t_hrt, bool is_initial) {
  if (is_initial) return kInitialTrustSeed;
  require_unit(prev_t_hrt, "service_risk: prev_t_hrt");
  return 1.0 - prev_t_hrt;
}

double overall_risk(double lambda, double r_env, double r_service) {
  require_unit(lambda, "overall_risk: lambda");
  require_unit(r_env, "overall_risk: r_env");
  require_unit(r_service, "overall_risk: r_service");
  return lambda * r_env + (1.0 - lambda) * r_service;
}

double contextual_trust(double t_base, const std::vector<ContextModifier>& modifiers) {
  require(t_base > 0.0 && t_base <= 1.0, "contextual_trust: t_base must be in (0,1]");
  double product = t_base;
  for (const auto& m : modifiers) {
    require(m.value > 0.0, "contextual_trust: modifier must be > 0");
    require(m.value <= kModifierCap, "contextual_trust: modifier exceeds cap");
    require(m.weight >= 0.0, "contextual_trust: negative modifier weight");
    product *= std::pow(m.value, m.weight);
  }
  return std::min(product, 1.0);
}

double overall_trust(double t_hrt, double t_ctx, double r_overall) {
  require_unit(t_hrt, "overall_trust: t_hrt");
  require_unit(t_ctx, "overall_trust: t_ctx");
  require_unit(r_overall, "overall_trust: r_overall");
  double w_hrt = 0.5 - 0.2 * r_overall;
  double w_ctx = 0.5 + 0.2 * r_overall;
  return w_hrt * t_hrt + w_ctx * t_ctx;
}

EcosystemSnapshot ecosystem_metrics(const std::vector<AgentRiskTrust>& agents) {
  require(!agents.empty(), "ecosystem_metrics: no active agents");
  EcosystemSnapshot snap;
  double trust_sum = 0.0;
  double risk_max = 0.0;
  for (const auto& a : agents) {
    require_unit(a.t_overall, "ecosystem_metrics: t_overall");
    require_unit(a.r_overall, "ecosystem_metrics: r_overall");
    trust_sum += a.t_overall;
    risk_max = std::max(risk_max, a.r_overall);
    snap.active_agent_ids.insert(a.agent_id);
  }
  snap.t_ecosystem = trust_sum / static_cast<double>(agents.size());
  snap.r_ecosystem = risk_max;
  return snap;
}

}  // namespace trustgov::metrics
