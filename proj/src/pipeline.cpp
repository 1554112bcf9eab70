#include "trustgov/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "trustgov/crypto.hpp"
#include "trustgov/util.hpp"

namespace trustgov::pipeline {

using util::require;

const char* to_string(Regime r) {
  switch (r) {
    case Regime::normal: return "normal";
    case Regime::rain: return "rain";
    case Regime::heavy_rain: return "heavy-rain";
    case Regime::heatwave: return "heatwave";
  }
  return "?";
}

namespace {

bool regime_matches(Regime r, const WeatherObservation& o, const WeatherBands& b) {
  switch (r) {
    case Regime::heavy_rain:
      return o.precipitation_mm >= b.heavy_rain_mm;
    case Regime::heatwave:
      return o.temperature_c >= b.heatwave_temp_c ||
             (o.anomaly_c >= b.heatwave_anomaly_c && o.uv_index >= b.heatwave_min_uv);
    case Regime::rain:
      return o.precipitation_mm >= b.rain_low_mm && o.precipitation_mm <= b.rain_high_mm;
    case Regime::normal:
      return true;
  }
  return false;
}

constexpr Regime kDefaultPrecedence[] = {Regime::heavy_rain, Regime::heatwave, Regime::rain};

}  // namespace

Regime classify_regime(const WeatherObservation& obs, const WeatherBands& bands) {
  return classify_regime(obs, bands, std::span<const Regime>(kDefaultPrecedence, 3));
}

Regime classify_regime(const WeatherObservation& obs, const WeatherBands& bands,
                       std::span<const Regime> precedence) {
  require(obs.precipitation_mm >= 0.0, "classify_regime: negative precipitation");
  for (Regime r : precedence)
    if (regime_matches(r, obs, bands)) return r;
  return Regime::normal;
}

DomainProfile DomainProfile::for_domain(const std::string& domain) {
  DomainProfile p;
  p.domain = domain;
  if (domain == "weather") p.lambda = 0.6;
  else if (domain == "traffic") p.lambda = 0.7;
  else if (domain == "fire") p.lambda = 0.8;
  else throw util::ConfigError("no default profile for domain: " + domain);
  return p;
}

metrics::EnvInput env_input(const Observation& obs, const DomainProfile& profile) {
  require(obs.domain == profile.domain, "env_input: observation/profile domain mismatch");
  if (const auto* w = std::get_if<WeatherObservation>(&obs.payload)) {
    metrics::ContinuousSignals signals;
    signals.indicators.push_back({w->temperature_c, w->temp_baseline, w->temp_tolerance});
    signals.indicators.push_back({w->precipitation_mm, w->precip_baseline, w->precip_tolerance});
    return signals;
  }
  if (const auto* t = std::get_if<TrafficObservation>(&obs.payload)) {
    return metrics::CapacityObservation{t->vehicles_per_100m, profile.congestion_per_100m};
  }
  const auto& f = std::get<FireObservation>(obs.payload);
  require(profile.hazard_min_events == 1, "env_input: hazard threshold must be 1 event");
  return metrics::HazardObservation{f.detections};
}

std::vector<metrics::ContextModifier> context_modifiers(const Observation& obs,
                                                        const DomainProfile& profile) {
  std::vector<metrics::ContextModifier> mods;
  for (const auto& [label, value] : obs.context) {
    double weight = 1.0;
    auto it = profile.context_weights.find(label);
    if (it != profile.context_weights.end()) weight = it->second;
    mods.push_back({value, weight});
  }
  return mods;
}

metrics::AgentRiskTrust advance(MetricState& state, const DomainProfile& profile,
                                const Observation& obs, const RoundInputs& inputs,
                                const std::string& agent_id) {
  bool initial = !state.has_prev;

  metrics::AgentRiskTrust out;
  out.agent_id = agent_id;
  out.timestamp = obs.timestamp;
  out.lambda = profile.lambda;
  out.r_env = metrics::env_risk(env_input(obs, profile));
  out.r_service = metrics::service_risk(state.prev_t_hrt, initial);

  double t_rept = metrics::reputation_trust(inputs.reputation);
  out.t_hrt = metrics::hrt_update(state.prev_t_hrt, inputs.selected ? 1 : 0, t_rept, profile.hrt,
                                  initial);
  out.r_overall = metrics::overall_risk(profile.lambda, out.r_env, out.r_service);
  out.t_ctx = metrics::contextual_trust(profile.t_base, context_modifiers(obs, profile));
  out.t_overall = metrics::overall_trust(out.t_hrt, out.t_ctx, out.r_overall);

  state.prev_t_hrt = out.t_hrt;
  state.has_prev = true;
  return out;
}

std::vector<metrics::CandidateOutcome> reputation_inputs(
    const std::vector<policy::CandidateReport>& prev_reports,
    const std::optional<std::string>& selected_model,
    const std::map<std::string, double>& mae_by_model, double eps_r, double eps_t) {
  const policy::CandidateReport* selected = nullptr;
  if (selected_model) {
    for (const auto& r : prev_reports)
      if (r.model_id == *selected_model) selected = &r;
  }

  std::vector<metrics::CandidateOutcome> out;
  out.reserve(prev_reports.size());
  for (const auto& r : prev_reports) {
    metrics::CandidateOutcome c;
    auto it = mae_by_model.find(r.model_id);
    double err = it != mae_by_model.end() ? it->second : 1.0;
    c.confidence = std::clamp(1.0 - err, 0.0, 1.0);
    c.is_best = selected && std::abs(r.r - selected->r) <= eps_r &&
                std::abs(r.t - selected->t) <= eps_t;
    c.output_label = c.is_best ? "aligned" : "divergent";
    out.push_back(std::move(c));
  }
  return out;
}

nlohmann::json to_json(const Observation& obs) {
  nlohmann::json j;
  j["domain"] = obs.domain;
  j["timestamp"] = obs.timestamp;
  if (const auto* w = std::get_if<WeatherObservation>(&obs.payload)) {
    j["weather"] = {
        {"temperature_c", w->temperature_c},   {"temp_baseline", w->temp_baseline},
        {"temp_tolerance", w->temp_tolerance}, {"precipitation_mm", w->precipitation_mm},
        {"precip_baseline", w->precip_baseline}, {"precip_tolerance", w->precip_tolerance},
        {"anomaly_c", w->anomaly_c},           {"uv_index", w->uv_index},
    };
  } else if (const auto* t = std::get_if<TrafficObservation>(&obs.payload)) {
    j["traffic"] = {{"vehicles_per_100m", t->vehicles_per_100m}};
  } else {
    const auto& f = std::get<FireObservation>(obs.payload);
    j["fire"] = {{"detections", f.detections}};
  }
  if (!obs.context.empty()) j["context"] = obs.context;
  return j;
}

Observation observation_from_json(const nlohmann::json& j) {
  Observation obs;
  obs.domain = j.at("domain").get<std::string>();
  obs.timestamp = j.at("timestamp").get<double>();
  if (j.contains("weather")) {
    const auto& w = j["weather"];
    WeatherObservation payload;
    payload.temperature_c = w.at("temperature_c").get<double>();
    payload.temp_baseline = w.at("temp_baseline").get<double>();
    payload.temp_tolerance = w.at("temp_tolerance").get<double>();
    payload.precipitation_mm = w.at("precipitation_mm").get<double>();
    payload.precip_baseline = w.at("precip_baseline").get<double>();
    payload.precip_tolerance = w.at("precip_tolerance").get<double>();
    payload.anomaly_c = w.at("anomaly_c").get<double>();
    payload.uv_index = w.at("uv_index").get<double>();
    obs.payload = payload;
  } else if (j.contains("traffic")) {
    obs.payload = TrafficObservation{j["traffic"].at("vehicles_per_100m").get<double>()};
  } else if (j.contains("fire")) {
    obs.payload = FireObservation{j["fire"].at("detections").get<int>()};
  } else {
    throw util::InputError("observation json has no payload");
  }
  if (j.contains("context")) {
    for (const auto& [label, v] : j["context"].items()) obs.context[label] = v.get<double>();
  }
  return obs;
}

std::string observation_digest_hex(const Observation& obs) {
  auto digest = crypto::sha256(to_json(obs).dump());
  return crypto::to_hex(digest);
}

}  // namespace trustgov::pipeline
