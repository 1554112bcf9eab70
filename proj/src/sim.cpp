#include "trustgov/sim.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trustgov/report.hpp"
#include "trustgov/util.hpp"
#include "trustgov/wire.hpp"

namespace trustgov::sim {

namespace fs = std::filesystem;
using util::ConfigError;
using util::fmt_double;
using util::require;

void Scenario::validate() const {
  require(iterations >= 1, "scenario: iterations must be >= 1");
  require(requests_per_iteration >= 1, "scenario: requests_per_iteration must be >= 1");
  require(round_interval_s > 0.0, "scenario: round_interval_s must be > 0");
  require(request_gap_s > 0.0, "scenario: request_gap_s must be > 0");
  require(!agents.empty(), "scenario: no agents configured");
  if (noise_override) require(*noise_override >= 0.0, "scenario: noise_override must be >= 0");
  for (double c : {costs.fetch, costs.compute, costs.agent_chain_log, costs.validate,
                   costs.mae_select, costs.feedback, costs.final_decision, costs.gov_chain_log})
    require(c >= 0.0, "scenario: stage costs must be >= 0");

  std::set<std::string> ids;
  for (const auto& a : agents) {
    require(!a.id.empty(), "scenario: agent id empty");
    require(ids.insert(a.id).second, "scenario: duplicate agent id " + a.id);
    require(!a.observations.empty(), "scenario: agent " + a.id + " has no observations");
    require(!a.reasoners.empty(), "scenario: agent " + a.id + " has no reasoners");
    std::set<std::string> models;
    for (const auto& r : a.reasoners) {
      require(!r.model_id.empty(), "scenario: empty model id");
      require(models.insert(r.model_id).second, "scenario: duplicate model id " + r.model_id);
      require(r.noise >= 0.0, "scenario: negative noise amplitude");
    }
    for (const auto& obs : a.observations)
      require(obs.domain == a.domain, "scenario: observation domain mismatch for " + a.id);
    if (a.lambda) require(*a.lambda >= 0.0 && *a.lambda <= 1.0, "scenario: lambda out of range");
    if (a.t_base) require(*a.t_base > 0.0 && *a.t_base <= 1.0, "scenario: t_base out of range");
    if (a.hrt) {
      for (double v : {a.hrt->alpha, a.hrt->beta, a.hrt->delta})
        require(v >= 0.0 && v <= 1.0, "scenario: smoothing constants must be in [0,1]");
    }
    if (a.congestion_per_100m)
      require(*a.congestion_per_100m > 0.0, "scenario: congestion threshold must be positive");
    if (a.bands)
      require(a.bands->heavy_rain_mm > 0.0 && a.bands->rain_low_mm > 0.0 &&
                  a.bands->rain_high_mm > 0.0,
              "scenario: regime thresholds must be positive");
  }
}

Scenario Scenario::load(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("scenario parse error: " + std::string(e.what()));
  }
  fs::path base = path.parent_path();

  Scenario s;
  s.seed = j.value("seed", std::uint64_t{7});
  s.iterations = j.value("iterations", 3);
  s.requests_per_iteration = j.value("requests_per_iteration", 20);
  s.round_interval_s = j.value("round_interval_s", 0.25);
  s.request_gap_s = j.value("request_gap_s", 0.25);
  s.baseline_model = j.value("baseline_model", std::string("alpha"));
  if (j.contains("noise_override")) s.noise_override = j["noise_override"].get<double>();
  if (j.contains("agent_batch")) {
    s.agent_batch.batch_size = j["agent_batch"].value("batch_size", std::size_t{16});
    s.agent_batch.max_delay_s = j["agent_batch"].value("max_delay_s", 1.0);
  }
  if (j.contains("agent_anchor_mode")) {
    auto mode = j["agent_anchor_mode"].get<std::string>();
    if (mode == "synchronous") s.agent_anchor_mode = ledger::AnchorMode::synchronous;
    else if (mode == "batched") s.agent_anchor_mode = ledger::AnchorMode::batched;
    else throw ConfigError("unknown agent_anchor_mode: " + mode);
  }
  if (j.contains("stage_costs_ms")) {
    const auto& c = j["stage_costs_ms"];
    s.costs.fetch = c.value("fetch", s.costs.fetch);
    s.costs.compute = c.value("compute", s.costs.compute);
    s.costs.agent_chain_log = c.value("agent_chain_log", s.costs.agent_chain_log);
    s.costs.validate = c.value("validate", s.costs.validate);
    s.costs.mae_select = c.value("mae_select", s.costs.mae_select);
    s.costs.feedback = c.value("feedback", s.costs.feedback);
    s.costs.final_decision = c.value("final_decision", s.costs.final_decision);
    s.costs.gov_chain_log = c.value("gov_chain_log", s.costs.gov_chain_log);
  }
  if (j.contains("plateau")) {
    const auto& p = j["plateau"];
    s.plateau.domain = p.value("domain", s.plateau.domain);
    s.plateau.rounds = p.value("rounds", s.plateau.rounds);
    s.plateau.lo = p.value("lo", s.plateau.lo);
    s.plateau.hi = p.value("hi", s.plateau.hi);
  }

  for (const auto& aj : j.at("agents")) {
    AgentSpec a;
    a.id = aj.at("id").get<std::string>();
    a.domain = aj.at("domain").get<std::string>();
    fs::path csv = aj.at("observations").get<std::string>();
    if (csv.is_relative()) csv = base / csv;
    a.observations = agent::observations_from_csv(csv, a.domain);
    if (aj.contains("lambda")) a.lambda = aj["lambda"].get<double>();
    if (aj.contains("t_base")) a.t_base = aj["t_base"].get<double>();
    if (aj.contains("hrt")) {
      metrics::HrtParams params;
      params.alpha = aj["hrt"].value("alpha", params.alpha);
      params.beta = aj["hrt"].value("beta", params.beta);
      params.delta = aj["hrt"].value("delta", params.delta);
      a.hrt = params;
    }
    if (aj.contains("congestion_per_100m"))
      a.congestion_per_100m = aj["congestion_per_100m"].get<double>();
    if (aj.contains("bands")) {
      pipeline::WeatherBands bands;
      const auto& bj = aj["bands"];
      bands.heavy_rain_mm = bj.value("heavy_rain_mm", bands.heavy_rain_mm);
      bands.rain_low_mm = bj.value("rain_low_mm", bands.rain_low_mm);
      bands.rain_high_mm = bj.value("rain_high_mm", bands.rain_high_mm);
      bands.heatwave_temp_c = bj.value("heatwave_temp_c", bands.heatwave_temp_c);
      bands.heatwave_anomaly_c = bj.value("heatwave_anomaly_c", bands.heatwave_anomaly_c);
      bands.heatwave_min_uv = bj.value("heatwave_min_uv", bands.heatwave_min_uv);
      a.bands = bands;
    }
    if (aj.contains("context_weights")) {
      for (const auto& [label, w] : aj["context_weights"].items())
        a.context_weights[label] = w.get<double>();
    }
    for (const auto& rj : aj.at("reasoners")) {
      ReasonerSpec r;
      r.model_id = rj.at("model_id").get<std::string>();
      r.bias_r = rj.value("bias_r", 0.0);
      r.bias_t = rj.value("bias_t", 0.0);
      r.noise = rj.value("noise", 0.0);
      a.reasoners.push_back(std::move(r));
    }
    s.agents.push_back(std::move(a));
  }

  s.validate();
  return s;
}

namespace {

std::vector<pipeline::Observation> default_weather_script() {
  std::vector<pipeline::Observation> out;
  for (int i = 0; i < 60; ++i) {
    pipeline::Observation obs;
    obs.domain = "weather";
    obs.timestamp = i * 0.25;
    pipeline::WeatherObservation w;
    bool heat_spell = i >= 30 && i <= 33;
    w.temperature_c = heat_spell ? 36.5 : 29.0 + 0.5 * (i % 5);
    w.temp_baseline = 30.0;
    w.temp_tolerance = 5.0;
    w.precipitation_mm = (i >= 10 && i <= 12) ? 8.0 : 0.5 + 0.1 * (i % 3);
    w.precip_baseline = 1.0;
    w.precip_tolerance = 10.0;
    w.anomaly_c = heat_spell ? 6.5 : 1.0;
    w.uv_index = heat_spell ? 9.0 : 6.0;
    obs.payload = w;
    obs.context = {{"freshness", 1.15}, {"integrity", 1.0}};
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<pipeline::Observation> default_traffic_script() {
  std::vector<pipeline::Observation> out;
  for (int i = 0; i < 60; ++i) {
    pipeline::Observation obs;
    obs.domain = "traffic";
    obs.timestamp = i * 0.25;
    obs.payload = pipeline::TrafficObservation{20.0 + (i % 3)};
    obs.context = {{"signal_health", 1.2}};
    out.push_back(std::move(obs));
  }
  return out;
}

std::vector<pipeline::Observation> default_fire_script() {
  std::vector<pipeline::Observation> out;
  for (int i = 0; i < 60; ++i) {
    pipeline::Observation obs;
    obs.domain = "fire";
    obs.timestamp = i * 0.25;
    int detections = 0;
    if (i < 20) detections = (i % 7 == 3) ? 2 : 1;
    obs.payload = pipeline::FireObservation{detections};
    double feed = 1.3;
    if (i < 20) feed = 0.10;
    else if (i < 40) feed = 0.5 + (i - 20) * (0.8 / 19.0);
    obs.context = {{"feed_quality", feed}};
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace

Scenario Scenario::default_desk() {
  Scenario s;
  s.agents.push_back(AgentSpec{
      "wx-1",
      "weather",
      default_weather_script(),
      {{"alpha", 0.03, -0.04, 0.0}, {"bravo", 0.0, 0.0, 0.0}, {"charlie", 0.05, -0.02, 0.0}},
      {},
      std::nullopt,
  });
  s.agents.push_back(AgentSpec{
      "tr-1",
      "traffic",
      default_traffic_script(),
      {{"alpha", -0.10, -0.12, 0.0}, {"bravo", 0.09, -0.11, 0.0}, {"charlie", 0.0, 0.0, 0.0}},
      {},
      std::nullopt,
  });
  s.agents.push_back(AgentSpec{
      "fs-1",
      "fire",
      default_fire_script(),
      {{"alpha", 0.0, 0.0, 0.0}, {"bravo", 0.04, -0.12, 0.0}, {"charlie", 0.06, -0.18, 0.0}},
      {},
      std::nullopt,
  });
  s.validate();
  return s;
}

namespace {

struct Harness {
  ledger::KeyRegistry registry;
  std::unique_ptr<ledger::Chain> gov_chain;
  std::vector<std::unique_ptr<ledger::Chain>> agent_chains;
  std::vector<std::unique_ptr<agent::AgentRuntime>> agents;
  std::unique_ptr<gov::GovernanceNode> governance;
};

pipeline::DomainProfile profile_for(const AgentSpec& spec) {
  auto profile = pipeline::DomainProfile::for_domain(spec.domain);
  if (spec.lambda) profile.lambda = *spec.lambda;
  if (spec.t_base) profile.t_base = *spec.t_base;
  if (spec.hrt) profile.hrt = *spec.hrt;
  if (spec.congestion_per_100m) profile.congestion_per_100m = *spec.congestion_per_100m;
  if (spec.bands) profile.bands = *spec.bands;
  profile.context_weights = spec.context_weights;
  return profile;
}

std::string agent_secret(const std::string& id) { return "k-" + id; }

Harness build_harness(const std::vector<AgentSpec>& specs, const policy::PolicyMatrix& matrix,
                      const Scenario& scenario, const fs::path& chain_dir) {
  Harness h;
  std::string digest = policy::policy_digest(matrix);

  for (const auto& spec : specs) h.registry.register_key(spec.id, agent_secret(spec.id));
  h.registry.register_key("governance", agent_secret("governance"));

  auto gov_signer =
      std::make_shared<ledger::KeyedDigestSigner>("governance", agent_secret("governance"));
  h.gov_chain = std::make_unique<ledger::Chain>(gov_signer, nullptr, chain_dir / "governance.log");
  h.gov_chain->set_anchor_mode(ledger::AnchorMode::synchronous);

  std::map<std::string, pipeline::DomainProfile> profiles;
  for (const auto& spec : specs) {
    auto signer = std::make_shared<ledger::KeyedDigestSigner>(spec.id, agent_secret(spec.id));
    auto chain = std::make_unique<ledger::Chain>(signer, nullptr,
                                                 chain_dir / ("agent_" + spec.id + ".log"));
    chain->set_anchor_mode(scenario.agent_anchor_mode, scenario.agent_batch);

    std::vector<agent::StubReasoner> reasoners;
    for (const auto& r : spec.reasoners) {
      agent::StubReasoner sr;
      sr.model_id = r.model_id;
      sr.bias_r = r.bias_r;
      sr.bias_t = r.bias_t;
      sr.noise_amplitude = scenario.noise_override.value_or(r.noise);
      reasoners.push_back(std::move(sr));
    }

    auto profile = profile_for(spec);
    auto it = profiles.find(spec.domain);
    if (it == profiles.end()) profiles.emplace(spec.domain, profile);

    auto runtime = std::make_unique<agent::AgentRuntime>(spec.id, profile, std::move(reasoners),
                                                         signer, chain.get(), digest);
    runtime->set_reputation_tolerances(matrix.eps_r, matrix.eps_t);
    h.agent_chains.push_back(std::move(chain));
    h.agents.push_back(std::move(runtime));
  }

  h.governance =
      std::make_unique<gov::GovernanceNode>(matrix, profiles, h.registry, h.gov_chain.get());
  return h;
}

void write_keys(const ledger::KeyRegistry& registry, const fs::path& path) {
  registry.save(path);
}

std::string csv_bool(bool v) { return v ? "1" : "0"; }

void append_record_rows(std::ostream& out, int iteration, const wire::DecisionRecord& rec) {
  if (rec.rejected) {
    out << iteration << ',' << rec.round << ',' << rec.agent_id << ',' << rec.domain
        << ",-,,,,0,0,0,rejected:" << rec.reject_reason << ",,0,0,0,none,0\n";
    return;
  }
  for (const auto& c : rec.candidates) {
    bool selected = rec.selected_model && *rec.selected_model == c.model_id;
    out << iteration << ',' << rec.round << ',' << rec.agent_id << ',' << rec.domain << ','
        << c.model_id << ',' << fmt_double(c.r) << ',' << fmt_double(c.t) << ','
        << fmt_double(c.mae) << ',' << csv_bool(c.admitted) << ',' << csv_bool(selected) << ','
        << csv_bool(selected && rec.used_fallback) << ','
        << (rec.decision ? policy::to_string(rec.decision->verdict) : "unresolved") << ','
        << (rec.decision ? policy::to_string(rec.decision->reason) : "") << ','
        << csv_bool(rec.unresolved) << ',' << csv_bool(rec.flags.joint_actuation) << ','
        << csv_bool(rec.flags.escalation_active) << ',' << rec.flags.escalation_action << ','
        << csv_bool(rec.flags.needs_human) << '\n';
  }
}

constexpr const char* kRunCsvHeader =
    "iteration,round,agent,domain,model,r,t,mae,admitted,selected,fallback,verdict,reason,"
    "unresolved,joint,escalation_active,escalation_action,needs_human\n";

nlohmann::json stage_totals(const StageCostsMs& costs, std::uint64_t agent_requests,
                            std::uint64_t gov_records) {
  nlohmann::json j;
  j["agent_stage_ms"] = {{"fetch", costs.fetch * agent_requests},
                         {"compute", costs.compute * agent_requests},
                         {"agent_chain_log", costs.agent_chain_log * agent_requests}};
  j["governance_stage_ms"] = {{"validate", costs.validate * gov_records},
                              {"mae_select", costs.mae_select * gov_records},
                              {"feedback", costs.feedback * gov_records},
                              {"final_decision", costs.final_decision * gov_records},
                              {"gov_chain_log", costs.gov_chain_log * gov_records}};
  return j;
}

nlohmann::json counters_json(const gov::GovernanceCounters& c) {
  return {{"rounds", c.rounds},
          {"packets", c.packets},
          {"admitted_packets", c.admitted_packets},
          {"rejected_packets", c.rejected_packets},
          {"records", c.records},
          {"selections", c.selections},
          {"fallbacks", c.fallbacks},
          {"unresolved_rounds", c.unresolved_rounds},
          {"feedback_pairs", c.feedback_pairs},
          {"joint_rounds", c.joint_rounds},
          {"escalation_transitions", c.escalation_transitions},
          {"needs_human_events", c.needs_human_events}};
}

}  // namespace

analytics::IterationMae to_iteration_mae(const IterationReport& report) { return report.mae; }

ConvergenceResult run_convergence(const Scenario& scenario, const policy::PolicyMatrix& matrix,
                                  const fs::path& out_dir) {
  scenario.validate();
  matrix.validate();
  fs::create_directories(out_dir / "chains");

  std::mt19937_64 rng(scenario.seed);
  Harness h = build_harness(scenario.agents, matrix, scenario, out_dir / "chains");
  write_keys(h.registry, out_dir / "keys.json");

  std::ofstream packets_out(out_dir / "packets.jsonl");
  std::ofstream decisions_out(out_dir / "decisions.jsonl");
  std::ofstream run_csv(out_dir / "run.csv");
  run_csv << kRunCsvHeader;

  ConvergenceResult result;
  std::uint64_t agent_requests = 0;

  for (int iter = 0; iter < scenario.iterations; ++iter) {
    IterationReport rep;
    rep.iteration = iter;
    auto counters_before = h.governance->counters();

    for (int req = 0; req < scenario.requests_per_iteration; ++req) {
      int round = iter * scenario.requests_per_iteration + req;
      double now = round * scenario.round_interval_s;

      // Packets travel through the line-delimited framing they are defined in.
      std::vector<wire::GovernancePacket> packets;
      for (std::size_t i = 0; i < h.agents.size(); ++i) {
        const auto& spec = scenario.agents[i];
        pipeline::Observation obs = spec.observations[round % spec.observations.size()];
        obs.timestamp = now;
        auto packet = h.agents[i]->observe_and_report(obs, &rng);
        ++agent_requests;
        std::string line = wire::to_json(packet).dump();
        packets_out << line << '\n';
        packets.push_back(wire::packet_from_json(nlohmann::json::parse(line)));
      }
      for (auto& chain : h.agent_chains) chain->tick(now);

      auto records = h.governance->process_round(packets, now);
      for (const auto& rec : records) {
        wire::write_jsonl(decisions_out, wire::to_json(rec));
        append_record_rows(run_csv, iter, rec);
        for (auto& agent : h.agents)
          if (agent->id() == rec.agent_id) agent->receive_record(rec);
        if (rec.rejected) continue;
        for (const auto& c : rec.candidates) rep.mae[rec.agent_id][c.model_id].push_back(c.mae);
        if (rec.selected_model) rep.selections[rec.agent_id][*rec.selected_model] += 1;
        if (rec.used_fallback) rep.fallback_count[rec.agent_id] += 1;
        else rep.fallback_count.try_emplace(rec.agent_id, 0);
      }
    }

    auto counters_after = h.governance->counters();
    rep.escalation_transitions =
        int(counters_after.escalation_transitions - counters_before.escalation_transitions);
    rep.needs_human_events =
        int(counters_after.needs_human_events - counters_before.needs_human_events);
    rep.unresolved_rounds =
        int(counters_after.unresolved_rounds - counters_before.unresolved_rounds);
    result.iterations.push_back(std::move(rep));

    if (iter + 1 < scenario.iterations)
      for (auto& agent : h.agents) agent->absorb_staged_feedback(matrix.feedback_factor);
  }

  for (auto& chain : h.agent_chains) chain->flush();
  result.counters = h.governance->counters();
  result.escalation_pending = result.counters.needs_human_events > 0;

  nlohmann::json metrics;
  metrics["counters"] = counters_json(result.counters);
  metrics["stage_totals"] = stage_totals(scenario.costs, agent_requests, result.counters.records);
  metrics["chains"] = nlohmann::json::object();
  metrics["chains"]["governance"] = h.gov_chain->size();
  for (std::size_t i = 0; i < h.agents.size(); ++i)
    metrics["chains"]["agent_" + h.agents[i]->id()] = h.agent_chains[i]->size();
  util::write_file(out_dir / "metrics.json", metrics.dump(2) + "\n");

  if (result.escalation_pending) {
    nlohmann::json pending = {{"needs_human_events", result.counters.needs_human_events},
                              {"status", "awaiting-confirmation"}};
    util::write_file(out_dir / "escalation_pending.json", pending.dump(2) + "\n");
  }

  report::write_convergence_summary(out_dir, result);
  report::write_run_analysis(out_dir, result.iterations, scenario.baseline_model);
  return result;
}

std::vector<PerfPoint> run_performance(const Scenario& scenario,
                                       const policy::PolicyMatrix& matrix,
                                       const std::vector<int>& sizes, int agent_count,
                                       const fs::path& out_dir, bool include_wall_clock) {
  scenario.validate();
  matrix.validate();
  require(agent_count >= 1, "run_performance: agent_count must be >= 1");
  for (int n : sizes) require(n >= 1, "run_performance: workload size must be >= 1");
  fs::create_directories(out_dir);

  // Clone the scenario's agents cyclically up to the requested count.
  std::vector<AgentSpec> specs;
  for (int k = 0; k < agent_count; ++k) {
    AgentSpec spec = scenario.agents[k % scenario.agents.size()];
    int clone = k / int(scenario.agents.size());
    if (clone > 0) spec.id += "-c" + std::to_string(clone + 1);
    specs.push_back(std::move(spec));
  }

  double et_s = scenario.costs.et_ms() / 1000.0;
  double d_s = scenario.costs.d_ms() / 1000.0;

  std::vector<PerfPoint> points;
  nlohmann::json metrics;

  for (int n_requests : sizes) {
    auto wall_started = std::chrono::steady_clock::now();
    fs::path sub = out_dir / ("n" + std::to_string(n_requests));
    fs::create_directories(sub / "chains");
    std::mt19937_64 rng(scenario.seed);
    Harness h = build_harness(specs, matrix, scenario, sub / "chains");
    write_keys(h.registry, sub / "keys.json");
    std::ofstream decisions_out(sub / "decisions.jsonl");

    struct Dispatch {
      double agent_done = 0.0;
      int seq = 0;
      int agent = 0;
      double arrival = 0.0;
    };
    std::vector<Dispatch> dispatches;
    dispatches.reserve(std::size_t(n_requests));
    std::vector<double> agent_free(specs.size(), 0.0);
    for (int n = 0; n < n_requests; ++n) {
      int a = n % agent_count;
      int j = n / agent_count;
      double arrival = j * scenario.request_gap_s;
      double start = std::max(arrival, agent_free[std::size_t(a)]);
      double done = start + et_s;
      agent_free[std::size_t(a)] = done;
      dispatches.push_back({done, n, a, arrival});
    }
    std::stable_sort(dispatches.begin(), dispatches.end(), [](const auto& a, const auto& b) {
      return a.agent_done < b.agent_done || (a.agent_done == b.agent_done && a.seq < b.seq);
    });

    std::vector<std::size_t> next_obs(specs.size(), 0);
    double gov_free = 0.0;
    double total_wait = 0.0;
    double last_decision = 0.0;

    for (const auto& d : dispatches) {
      const auto& spec = specs[std::size_t(d.agent)];
      pipeline::Observation obs =
          spec.observations[next_obs[std::size_t(d.agent)] % spec.observations.size()];
      next_obs[std::size_t(d.agent)] += 1;
      obs.timestamp = d.arrival;
      auto packet = h.agents[std::size_t(d.agent)]->observe_and_report(obs, &rng);
      for (auto& chain : h.agent_chains) chain->tick(d.agent_done);

      double start_g = std::max(d.agent_done, gov_free);
      auto records = h.governance->process_round({packet}, start_g);
      for (const auto& rec : records) {
        wire::write_jsonl(decisions_out, wire::to_json(rec));
        h.agents[std::size_t(d.agent)]->receive_record(rec);
      }
      total_wait += start_g - d.agent_done;
      gov_free = start_g + d_s;
      last_decision = gov_free;
    }
    for (auto& chain : h.agent_chains) chain->flush();

    PerfPoint p;
    p.requests = n_requests;
    p.agents = agent_count;
    p.span_s = last_decision;  // first request arrives at t = 0
    p.throughput_rps = n_requests / p.span_s;
    p.et_ms = scenario.costs.et_ms();
    p.d_ms = scenario.costs.d_ms();
    p.mean_gov_wait_ms = total_wait / n_requests * 1000.0;
    points.push_back(p);

    nlohmann::json size_metrics;
    size_metrics["counters"] = counters_json(h.governance->counters());
    size_metrics["stage_totals"] =
        stage_totals(scenario.costs, std::uint64_t(n_requests), h.governance->counters().records);
    size_metrics["span_s"] = p.span_s;
    size_metrics["mean_gov_wait_ms"] = p.mean_gov_wait_ms;
    if (include_wall_clock) {
      double wall_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - wall_started)
                           .count();
      size_metrics["wall_elapsed_ms"] = wall_ms;
    }
    metrics["n" + std::to_string(n_requests)] = size_metrics;
  }

  report::write_perf_csv(out_dir / "perf.csv", points);
  util::write_file(out_dir / "metrics.json", metrics.dump(2) + "\n");
  return points;
}

}  // namespace trustgov::sim
