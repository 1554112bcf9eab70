#include "trustgov/agent.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "trustgov/util.hpp"

namespace trustgov::agent {

using util::InputError;
using util::require;

policy::CandidateReport emit(const StubReasoner& reasoner, const metrics::AgentRiskTrust& local,
                             std::mt19937_64* rng) {
  double noise_r = 0.0, noise_t = 0.0;
  if (reasoner.noise_amplitude > 0.0) {
    require(rng != nullptr, "emit: noise requires an rng");
    std::uniform_real_distribution<double> dist(-reasoner.noise_amplitude,
                                                reasoner.noise_amplitude);
    noise_r = dist(*rng);
    noise_t = dist(*rng);
  }
  policy::CandidateReport out;
  out.model_id = reasoner.model_id;
  out.r = std::clamp(local.r_overall + reasoner.bias_r + reasoner.adjust_r + noise_r, 0.0, 1.0);
  out.t = std::clamp(local.t_overall + reasoner.bias_t + reasoner.adjust_t + noise_t, 0.0, 1.0);
  return out;
}

void apply_feedback(StubReasoner& reasoner, double delta_r, double delta_t, double factor) {
  reasoner.adjust_r += factor * delta_r;
  reasoner.adjust_t += factor * delta_t;
}

AgentRuntime::AgentRuntime(std::string agent_id, pipeline::DomainProfile profile,
                           std::vector<StubReasoner> reasoners,
                           std::shared_ptr<const ledger::Signer> signer, ledger::Chain* chain,
                           std::string policy_digest)
    : id_(std::move(agent_id)),
      profile_(std::move(profile)),
      reasoners_(std::move(reasoners)),
      signer_(std::move(signer)),
      chain_(chain),
      policy_digest_(std::move(policy_digest)) {
  require(!id_.empty(), "agent id must not be empty");
  require(!reasoners_.empty(), "agent requires at least one reasoner");
  require(signer_ != nullptr, "agent requires a signer");
}

void AgentRuntime::set_reputation_tolerances(double eps_r, double eps_t) {
  eps_r_ = eps_r;
  eps_t_ = eps_t;
}

wire::GovernancePacket AgentRuntime::observe_and_report(const pipeline::Observation& obs,
                                                        std::mt19937_64* rng) {
  require(obs.domain == profile_.domain, "observation domain does not match agent profile");
  if (has_reported_)
    require(obs.timestamp > last_timestamp_, "agent timestamps must be strictly increasing");

  pipeline::RoundInputs inputs;
  inputs.selected = prev_selected_;
  inputs.reputation =
      pipeline::reputation_inputs(prev_reports_, prev_selected_model_, prev_mae_, eps_r_, eps_t_);
  metrics::AgentRiskTrust local = pipeline::advance(state_, profile_, obs, inputs, id_);
  last_local_ = local;

  wire::GovernancePacket packet;
  packet.agent_id = id_;
  packet.domain = profile_.domain;
  packet.timestamp = obs.timestamp;
  packet.observation = obs;
  packet.observation_digest = pipeline::observation_digest_hex(obs);
  packet.meta.domain = profile_.domain;
  packet.meta.policy_digest = policy_digest_;
  for (const auto& reasoner : reasoners_) packet.candidates.push_back(emit(reasoner, local, rng));
  wire::sign_packet(packet, *signer_);

  // Anchor the full local record before forwarding.
  if (chain_) {
    nlohmann::json anchor;
    anchor["agent_id"] = id_;
    anchor["timestamp"] = obs.timestamp;
    anchor["observation_digest"] = packet.observation_digest;
    anchor["metrics"] = {{"r_env", local.r_env},       {"r_service", local.r_service},
                         {"r_overall", local.r_overall}, {"t_hrt", local.t_hrt},
                         {"t_ctx", local.t_ctx},         {"t_overall", local.t_overall}};
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : packet.candidates)
      cands.push_back({{"model_id", c.model_id}, {"r", c.r}, {"t", c.t}});
    anchor["candidates"] = cands;
    chain_->append(anchor.dump(), obs.timestamp);
  }

  prev_reports_ = packet.candidates;
  last_timestamp_ = obs.timestamp;
  has_reported_ = true;
  return packet;
}

void AgentRuntime::receive_record(const wire::DecisionRecord& record) {
  if (record.rejected) {
    prev_selected_ = false;
    prev_selected_model_.reset();
    prev_mae_.clear();
    return;
  }
  prev_mae_.clear();
  for (const auto& c : record.candidates) {
    prev_mae_[c.model_id] = c.mae;
    if (c.feedback) staged_feedback_[c.model_id].push_back(*c.feedback);
  }
  prev_selected_model_ = record.selected_model;
  prev_selected_ = record.selected_model.has_value();
}

void AgentRuntime::absorb_staged_feedback(double factor) {
  for (auto& reasoner : reasoners_) {
    auto it = staged_feedback_.find(reasoner.model_id);
    if (it == staged_feedback_.end() || it->second.empty()) continue;
    double sum_r = 0.0, sum_t = 0.0;
    for (const auto& [dr, dt] : it->second) {
      sum_r += dr;
      sum_t += dt;
    }
    double n = static_cast<double>(it->second.size());
    apply_feedback(reasoner, sum_r / n, sum_t / n, factor);
  }
  staged_feedback_.clear();
}

namespace {

double cell(const std::vector<std::string>& row, const std::map<std::string, std::size_t>& cols,
            const std::string& name) {
  auto it = cols.find(name);
  if (it == cols.end()) throw InputError("observation csv missing column: " + name);
  if (it->second >= row.size()) throw InputError("observation csv row too short");
  return util::parse_double(row[it->second]);
}

}  // namespace

std::vector<pipeline::Observation> observations_from_csv(const std::filesystem::path& path,
                                                         const std::string& domain) {
  auto rows = util::read_csv(path);
  require(!rows.empty(), "observation csv is empty: " + path.string());

  std::map<std::string, std::size_t> cols;
  for (std::size_t i = 0; i < rows[0].size(); ++i) cols[rows[0][i]] = i;
  require(cols.count("t") == 1, "observation csv missing column: t");

  std::vector<pipeline::Observation> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    pipeline::Observation obs;
    obs.domain = domain;
    obs.timestamp = cell(row, cols, "t");

    if (domain == "weather") {
      pipeline::WeatherObservation w;
      w.temperature_c = cell(row, cols, "temp_c");
      w.temp_baseline = cell(row, cols, "temp_baseline");
      w.temp_tolerance = cell(row, cols, "temp_tol");
      w.precipitation_mm = cell(row, cols, "precip_mm");
      w.precip_baseline = cell(row, cols, "precip_baseline");
      w.precip_tolerance = cell(row, cols, "precip_tol");
      w.anomaly_c = cell(row, cols, "anomaly_c");
      w.uv_index = cell(row, cols, "uv_index");
      require(w.precipitation_mm >= 0.0, "negative precipitation in csv");
      obs.payload = w;
    } else if (domain == "traffic") {
      pipeline::TrafficObservation t;
      t.vehicles_per_100m = cell(row, cols, "vehicles_per_100m");
      require(t.vehicles_per_100m >= 0.0, "negative vehicle count in csv");
      obs.payload = t;
    } else if (domain == "fire") {
      pipeline::FireObservation f;
      f.detections = static_cast<int>(cell(row, cols, "detections"));
      require(f.detections >= 0, "negative detection count in csv");
      obs.payload = f;
    } else {
      throw InputError("unknown observation domain: " + domain);
    }

    for (const auto& [name, idx] : cols) {
      if (name.rfind("ctx_", 0) == 0 && idx < row.size())
        obs.context[name.substr(4)] = util::parse_double(row[idx]);
    }
    out.push_back(std::move(obs));
  }
  return out;
}

void observations_to_csv(const std::vector<pipeline::Observation>& observations,
                         const std::filesystem::path& path) {
  require(!observations.empty(), "no observations to write");
  const std::string& domain = observations.front().domain;

  std::vector<std::string> ctx_labels;
  for (const auto& [label, v] : observations.front().context) ctx_labels.push_back(label);

  std::ostringstream out;
  out << "t";
  if (domain == "weather")
    out << ",temp_c,temp_baseline,temp_tol,precip_mm,precip_baseline,precip_tol,anomaly_c,uv_index";
  else if (domain == "traffic")
    out << ",vehicles_per_100m";
  else if (domain == "fire")
    out << ",detections";
  else
    throw InputError("unknown observation domain: " + domain);
  for (const auto& label : ctx_labels) out << ",ctx_" << label;
  out << '\n';

  for (const auto& obs : observations) {
    require(obs.domain == domain, "mixed domains in observation list");
    out << util::fmt_double(obs.timestamp);
    if (const auto* w = std::get_if<pipeline::WeatherObservation>(&obs.payload)) {
      out << ',' << util::fmt_double(w->temperature_c) << ',' << util::fmt_double(w->temp_baseline)
          << ',' << util::fmt_double(w->temp_tolerance) << ','
          << util::fmt_double(w->precipitation_mm) << ',' << util::fmt_double(w->precip_baseline)
          << ',' << util::fmt_double(w->precip_tolerance) << ',' << util::fmt_double(w->anomaly_c)
          << ',' << util::fmt_double(w->uv_index);
    } else if (const auto* t = std::get_if<pipeline::TrafficObservation>(&obs.payload)) {
      out << ',' << util::fmt_double(t->vehicles_per_100m);
    } else {
      out << ',' << std::get<pipeline::FireObservation>(obs.payload).detections;
    }
    for (const auto& label : ctx_labels) {
      auto it = obs.context.find(label);
      require(it != obs.context.end(), "inconsistent context labels across observations");
      out << ',' << util::fmt_double(it->second);
    }
    out << '\n';
  }
  util::write_file(path, out.str());
}

}  // namespace trustgov::agent
