#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "trustgov/metrics.hpp"
#include "trustgov/policy.hpp"

namespace trustgov::pipeline {

struct WeatherObservation {
  double temperature_c = 0.0;
  double temp_baseline = 0.0;
  double temp_tolerance = 0.0;
  double precipitation_mm = 0.0;
  double precip_baseline = 0.0;
  double precip_tolerance = 0.0;
  double anomaly_c = 0.0;
  double uv_index = 0.0;
};

struct TrafficObservation {
  double vehicles_per_100m = 0.0;
};

struct FireObservation {
  int detections = 0;
};

using ObservationPayload = std::variant<WeatherObservation, TrafficObservation, FireObservation>;

/// One synthetic sensor reading plus its dynamic context modifiers
/// (label -> multiplicative value; exponent weights live in the profile).
struct Observation {
  std::string domain;
  double timestamp = 0.0;
  ObservationPayload payload;
  std::map<std::string, double> context;
};

enum class Regime { normal, rain, heavy_rain, heatwave };
const char* to_string(Regime r);

struct WeatherBands {
  double heavy_rain_mm = 40.0;
  double rain_low_mm = 5.0;
  double rain_high_mm = 20.0;
  double heatwave_temp_c = 40.0;
  double heatwave_anomaly_c = 5.0;
  double heatwave_min_uv = 8.0;
};

/// Regime label with precedence heavy_rain > heatwave > rain > normal.
Regime classify_regime(const WeatherObservation& obs, const WeatherBands& bands = {});
Regime classify_regime(const WeatherObservation& obs, const WeatherBands& bands,
                       std::span<const Regime> precedence);

/// Per-domain parameters: the risk-blend weight, trust baseline, context
/// weights, and the regime / capacity / hazard thresholds.
struct DomainProfile {
  std::string domain;
  double lambda = 0.6;
  double t_base = 0.7;
  metrics::HrtParams hrt;
  std::map<std::string, double> context_weights;  // missing label -> weight 1
  WeatherBands bands;
  double congestion_per_100m = 15.0;
  int hazard_min_events = 1;

  /// Shipped defaults: lambda 0.6 (weather), 0.7 (traffic), 0.8 (fire).
  static DomainProfile for_domain(const std::string& domain);
};

metrics::EnvInput env_input(const Observation& obs, const DomainProfile& profile);
std::vector<metrics::ContextModifier> context_modifiers(const Observation& obs,
                                                        const DomainProfile& profile);

/// What the previous governance round contributed to this round's metrics:
/// the success signal and the peer-reputation inputs.
struct RoundInputs {
  bool selected = false;
  std::vector<metrics::CandidateOutcome> reputation;  // empty -> 0.5 seed
};

struct MetricState {
  double prev_t_hrt = 0.0;
  bool has_prev = false;
};

/// Run one round of the full metric pipeline and advance the HRT state.
/// Used identically by agents for local metrics and by the governance node
/// for its reference, so the two layers cannot drift.
metrics::AgentRiskTrust advance(MetricState& state, const DomainProfile& profile,
                                const Observation& obs, const RoundInputs& inputs,
                                const std::string& agent_id);

/// Peer-reputation inputs derived from the previous round: confidence is the
/// complement of each candidate's recorded error, and a candidate counts as
/// agreeing when its emission sat within the admission tolerances of the
/// selected emission. No selection -> no agreement mass.
std::vector<metrics::CandidateOutcome> reputation_inputs(
    const std::vector<policy::CandidateReport>& prev_reports,
    const std::optional<std::string>& selected_model,
    const std::map<std::string, double>& mae_by_model, double eps_r, double eps_t);

nlohmann::json to_json(const Observation& obs);
Observation observation_from_json(const nlohmann::json& j);

/// Hex SHA-256 of the canonical (sorted-key JSON) serialization; shared by
/// the agent-chain anchor and the governance ingress check.
std::string observation_digest_hex(const Observation& obs);

}  // namespace trustgov::pipeline
