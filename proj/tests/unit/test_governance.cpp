#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "trustgov/governance.hpp"
#include "trustgov/util.hpp"

using namespace trustgov;
using gov::EscalationAction;
using gov::EscalationState;

namespace {
const policy::PolicyMatrix kMatrix = policy::PolicyMatrix::defaults();
}

TEST_CASE("escalation activates past the ecosystem trigger") {
  EscalationState state;
  auto [next, action] = gov::escalation_step(state, 0.71, 0.65, 0.0, kMatrix);
  CHECK(action == EscalationAction::escalate);
  CHECK(next.active);
  CHECK(next.last_transition_s == 0.0);
  CHECK(next.trigger_metric_at_activation == doctest::Approx(0.71));

  // low ecosystem trust needs human confirmation
  auto [next2, action2] = gov::escalation_step(state, 0.75, 0.55, 0.0, kMatrix);
  CHECK(action2 == EscalationAction::escalate_needs_human);
  CHECK(next2.active);

  // trust floor is inclusive
  auto [next3, action3] = gov::escalation_step(state, 0.75, 0.60, 0.0, kMatrix);
  CHECK(action3 == EscalationAction::escalate);

  // trigger is strict
  auto [next4, action4] = gov::escalation_step(state, 0.70, 0.9, 0.0, kMatrix);
  CHECK(action4 == EscalationAction::none);
  CHECK_FALSE(next4.active);
}

TEST_CASE("escalation hysteresis holds inside the band") {
  EscalationState active;
  active.active = true;
  active.last_transition_s = 0.0;

  auto [next, action] = gov::escalation_step(active, 0.68, 0.8, 2000.0, kMatrix);
  CHECK(action == EscalationAction::none);
  CHECK(next.active);
  CHECK(next.last_transition_s == 0.0);

  // below trigger - h, after cooldown: deactivate
  auto [next2, action2] = gov::escalation_step(active, 0.649, 0.8, 2000.0, kMatrix);
  CHECK(action2 == EscalationAction::deactivate);
  CHECK_FALSE(next2.active);
  CHECK(next2.last_transition_s == 2000.0);
}

TEST_CASE("escalation cooldown suppresses transitions") {
  EscalationState active;
  active.active = true;
  active.last_transition_s = 0.0;

  // 10 simulated minutes: suppressed even though the metric collapsed
  auto [next, action] = gov::escalation_step(active, 0.60, 0.8, 600.0, kMatrix);
  CHECK(action == EscalationAction::none);
  CHECK(next.active);
  CHECK(next.last_transition_s == 0.0);

  // suppressed activation too
  EscalationState idle;
  idle.active = false;
  idle.last_transition_s = 100.0;
  auto [next2, action2] = gov::escalation_step(idle, 0.99, 0.9, 500.0, kMatrix);
  CHECK(action2 == EscalationAction::none);
  CHECK_FALSE(next2.active);

  CHECK_THROWS_AS(gov::escalation_step(active, 0.5, 0.5, -1.0, kMatrix), util::InputError);
}

TEST_CASE("dithering inside the hysteresis band never transitions") {
  for (bool start_active : {false, true}) {
    EscalationState state;
    state.active = start_active;
    for (int i = 0; i < 500; ++i) {
      double r = testutil::value_in(0.651, 0.699);
      auto [next, action] = gov::escalation_step(state, r, testutil::unit_value(),
                                                 double(i) * 30.0, kMatrix);
      CHECK(action == EscalationAction::none);
      CHECK(next.active == start_active);
      state = next;
    }
  }
}

namespace {

using AgentList = std::vector<std::pair<std::string, std::string>>;

struct TestBench {
  ledger::KeyRegistry registry;
  std::shared_ptr<ledger::KeyedDigestSigner> gov_signer;
  std::unique_ptr<ledger::Chain> chain;
  std::map<std::string, std::shared_ptr<ledger::KeyedDigestSigner>> signers;
  std::unique_ptr<gov::GovernanceNode> node;

  explicit TestBench(const AgentList& agents) {
    for (const auto& [id, domain] : agents) {
      registry.register_key(id, "k-" + id);
      signers[id] = std::make_shared<ledger::KeyedDigestSigner>(id, "k-" + id);
      (void)domain;
    }
    registry.register_key("governance", "k-governance");
    gov_signer = std::make_shared<ledger::KeyedDigestSigner>("governance", "k-governance");
    chain = std::make_unique<ledger::Chain>(gov_signer, &registry);

    std::map<std::string, pipeline::DomainProfile> profiles;
    for (const auto& [id, domain] : agents)
      profiles.emplace(domain, pipeline::DomainProfile::for_domain(domain));
    node = std::make_unique<gov::GovernanceNode>(kMatrix, profiles, registry, chain.get());
  }

  wire::GovernancePacket packet(const std::string& id, const std::string& domain, double ts,
                                const pipeline::Observation& obs,
                                std::vector<policy::CandidateReport> candidates) {
    wire::GovernancePacket p;
    p.agent_id = id;
    p.domain = domain;
    p.timestamp = ts;
    p.observation = obs;
    p.observation_digest = pipeline::observation_digest_hex(obs);
    p.candidates = std::move(candidates);
    p.meta.domain = domain;
    wire::sign_packet(p, *signers.at(id));
    return p;
  }
};

pipeline::Observation traffic_obs(double ts, double vehicles) {
  pipeline::Observation obs;
  obs.domain = "traffic";
  obs.timestamp = ts;
  obs.payload = pipeline::TrafficObservation{vehicles};
  obs.context = {{"signal_health", 1.2}};
  return obs;
}

pipeline::Observation fire_obs(double ts, int detections, double feed) {
  pipeline::Observation obs;
  obs.domain = "fire";
  obs.timestamp = ts;
  obs.payload = pipeline::FireObservation{detections};
  obs.context = {{"feed_quality", feed}};
  return obs;
}

}  // namespace

TEST_CASE("reference metrics follow the zero-environmental-risk path") {
  TestBench bench(AgentList{{"wx-1", "weather"}});
  pipeline::Observation obs;
  obs.domain = "weather";
  obs.timestamp = 0.0;
  pipeline::WeatherObservation w;
  w.temperature_c = 30.5;  // inside both tolerance bands
  w.temp_baseline = 30.0;
  w.temp_tolerance = 5.0;
  w.precipitation_mm = 0.5;
  w.precip_baseline = 1.0;
  w.precip_tolerance = 10.0;
  w.anomaly_c = 1.0;
  w.uv_index = 6.0;
  obs.payload = w;
  obs.context = {{"freshness", 1.15}};

  auto ref = bench.node->compute_reference("wx-1", obs);
  CHECK(ref.r_env == 0.0);
  // first round: service risk seeds at 0.5, so r = (1 - lambda) * 0.5
  CHECK(ref.r_overall == doctest::Approx(0.4 * 0.5).epsilon(1e-15));
  CHECK(ref.t_hrt == 0.5);
}

TEST_CASE("a zero-error round selects cleanly with zero-valued feedback") {
  TestBench bench(AgentList{{"tr-1", "traffic"}});
  auto obs = traffic_obs(0.0, 20.0);

  // mirror the reference computation on a throwaway node to learn (r, t)
  TestBench probe(AgentList{{"tr-1", "traffic"}});
  auto ref = probe.node->compute_reference("tr-1", obs);

  auto packet = bench.packet("tr-1", "traffic", 0.0, obs,
                             {{"a", ref.r_overall, ref.t_overall},
                              {"b", ref.r_overall, ref.t_overall}});
  auto records = bench.node->process_round({packet}, 0.0);
  REQUIRE(records.size() == 1);
  const auto& rec = records[0];
  CHECK_FALSE(rec.rejected);
  CHECK(rec.r_ref == doctest::Approx(ref.r_overall));
  CHECK(rec.t_ref == doctest::Approx(ref.t_overall));
  REQUIRE(rec.selected_model.has_value());
  CHECK(*rec.selected_model == "a");  // exact tie resolves by ascending model id
  for (const auto& c : rec.candidates) {
    CHECK(c.mae == 0.0);
    if (c.model_id != *rec.selected_model) {
      REQUIRE(c.feedback.has_value());
      CHECK(c.feedback->first == 0.0);
      CHECK(c.feedback->second == 0.0);
    } else {
      CHECK_FALSE(c.feedback.has_value());
    }
  }
  REQUIRE(rec.decision.has_value());
  // R = 0.85 > theta_r with trust 0.7278 -> restrict
  CHECK(rec.decision->verdict == policy::Verdict::restrict);
  CHECK(bench.chain->size() == 1);
}

TEST_CASE("feedback pairs equal the reference deltas for every non-selected candidate") {
  TestBench bench(AgentList{{"fs-1", "fire"}});
  for (int round = 0; round < 5; ++round) {
    double ts = round * 1.0;
    std::vector<policy::CandidateReport> cands;
    for (int i = 0; i < 3; ++i)
      cands.push_back({"m" + std::to_string(i), testutil::unit_value(), testutil::unit_value()});
    auto packet = bench.packet("fs-1", "fire", ts, fire_obs(ts, 1, 0.8), cands);
    auto records = bench.node->process_round({packet}, ts);
    REQUIRE(records.size() == 1);
    const auto& rec = records[0];
    int feedback_count = 0;
    for (const auto& c : rec.candidates) {
      if (rec.selected_model && c.model_id == *rec.selected_model) {
        CHECK_FALSE(c.feedback.has_value());
        continue;
      }
      REQUIRE(c.feedback.has_value());
      CHECK(c.feedback->first == doctest::Approx(rec.r_ref - c.r).epsilon(1e-15));
      CHECK(c.feedback->second == doctest::Approx(rec.t_ref - c.t).epsilon(1e-15));
      ++feedback_count;
    }
    CHECK(feedback_count == int(rec.candidates.size()) - (rec.selected_model ? 1 : 0));
  }
}

TEST_CASE("invalid packets are rejected, anchored, and leave no trace in state") {
  TestBench bench(AgentList{{"tr-1", "traffic"}});

  auto good = bench.packet("tr-1", "traffic", 0.0, traffic_obs(0.0, 20.0), {{"a", 0.85, 0.72}});
  auto bad = good;
  bad.signature[0] = bad.signature[0] == 'a' ? 'b' : 'a';

  auto records = bench.node->process_round({bad}, 0.0);
  REQUIRE(records.size() == 1);
  CHECK(records[0].rejected);
  CHECK(records[0].reject_reason == "bad-signature");
  CHECK(bench.chain->size() == 1);  // rejection record still anchored
  CHECK(bench.node->latest_references().empty());
  CHECK(bench.node->counters().rejected_packets == 1);

  // digest mismatch
  auto mismatched = good;
  mismatched.observation_digest[0] = mismatched.observation_digest[0] == '0' ? '1' : '0';
  wire::sign_packet(mismatched, *bench.signers.at("tr-1"));
  records = bench.node->process_round({mismatched}, 1.0);
  CHECK(records[0].rejected);
  CHECK(records[0].reject_reason == "digest-mismatch");

  // unknown agent
  ledger::KeyedDigestSigner rogue("ghost", "k-ghost");
  auto ghost = good;
  ghost.agent_id = "ghost";
  wire::sign_packet(ghost, rogue);
  records = bench.node->process_round({ghost}, 2.0);
  CHECK(records[0].rejected);
  CHECK(records[0].reject_reason == "unknown-agent");

  // stale timestamp after a successful round
  records = bench.node->process_round({good}, 3.0);
  CHECK_FALSE(records[0].rejected);
  auto stale = bench.packet("tr-1", "traffic", -1.0, traffic_obs(-1.0, 20.0), {{"a", 0.8, 0.7}});
  records = bench.node->process_round({stale}, 4.0);
  CHECK(records[0].rejected);
  CHECK(records[0].reject_reason == "stale-timestamp");

  // a round accepts at most one packet per agent
  auto p1 = bench.packet("tr-1", "traffic", 5.0, traffic_obs(5.0, 20.0), {{"a", 0.85, 0.72}});
  auto p2 = bench.packet("tr-1", "traffic", 5.5, traffic_obs(5.5, 20.0), {{"a", 0.85, 0.72}});
  records = bench.node->process_round({p1, p2}, 5.5);
  REQUIRE(records.size() == 2);
  CHECK_FALSE(records[0].rejected);
  CHECK(records[1].rejected);
  CHECK(records[1].reject_reason == "duplicate-in-round");
}

TEST_CASE("unresolved non-fire rounds still issue feedback to every candidate") {
  TestBench bench(AgentList{{"tr-1", "traffic"}});
  // trust far from any admissible value
  auto packet =
      bench.packet("tr-1", "traffic", 0.0, traffic_obs(0.0, 20.0), {{"a", 0.85, 0.1}, {"b", 0.85, 0.2}});
  auto records = bench.node->process_round({packet}, 0.0);
  REQUIRE(records.size() == 1);
  const auto& rec = records[0];
  CHECK_FALSE(rec.rejected);
  CHECK(rec.unresolved);
  CHECK_FALSE(rec.selected_model.has_value());
  CHECK_FALSE(rec.decision.has_value());
  for (const auto& c : rec.candidates) CHECK(c.feedback.has_value());
  CHECK(bench.node->counters().unresolved_rounds == 1);
}

TEST_CASE("two high-risk agents raise the joint actuation flag") {
  TestBench bench(AgentList{{"tr-1", "traffic"}, {"fs-1", "fire"}});
  auto p1 = bench.packet("tr-1", "traffic", 0.0, traffic_obs(0.0, 20.0), {{"a", 0.85, 0.72}});
  auto p2 = bench.packet("fs-1", "fire", 0.0, fire_obs(0.0, 2, 0.1), {{"a", 0.9, 0.2}});
  auto records = bench.node->process_round({p1, p2}, 0.0);
  REQUIRE(records.size() == 2);
  // traffic reference R = 0.85, fire reference R = 0.9: both above 0.80
  for (const auto& rec : records) CHECK(rec.flags.joint_actuation);
  CHECK(bench.node->counters().joint_rounds == 1);
  // ecosystem risk 0.9 > 0.70 with mean trust below 0.60: human confirmation
  for (const auto& rec : records) {
    CHECK(rec.flags.escalation_active);
    CHECK(rec.flags.escalation_action == "escalate-needs-human");
    CHECK(rec.flags.needs_human);
  }
}

namespace {

pipeline::Observation weather_alert_obs(double ts, double ctx_value) {
  pipeline::Observation obs;
  obs.domain = "weather";
  obs.timestamp = ts;
  pipeline::WeatherObservation w;
  w.temperature_c = 45.0;  // both indicators far out of tolerance
  w.temp_baseline = 30.0;
  w.temp_tolerance = 5.0;
  w.precipitation_mm = 60.0;
  w.precip_baseline = 1.0;
  w.precip_tolerance = 10.0;
  w.anomaly_c = 15.0;
  w.uv_index = 9.0;
  obs.payload = w;
  obs.context = {{"freshness", ctx_value}};
  return obs;
}

}  // namespace

TEST_CASE("a reroute is denied while the weather alert is active, approved once it clears") {
  TestBench bench(AgentList{{"tr-1", "traffic"}, {"wx-1", "weather"}});

  // Starve the traffic agent's trust: inadmissible candidates make every
  // round unresolved, so the success signal stays 0 and the smoothed trust
  // decays until the congestion rule (risk >= 0.95) can fire.
  double ts = 0.0;
  metrics::AgentRiskTrust traffic_ref;
  for (int round = 0; round < 14; ++round) {
    ts = round * 1.0;
    auto starve =
        bench.packet("tr-1", "traffic", ts, traffic_obs(ts, 25.0), {{"a", 0.9, 0.05}});
    auto records = bench.node->process_round({starve}, ts);
    REQUIRE(records.size() == 1);
    CHECK(records[0].unresolved);
    traffic_ref = bench.node->latest_references().at("tr-1");
    if (policy::domain_trigger("traffic", traffic_ref.r_overall, traffic_ref.t_overall,
                               kMatrix))
      break;
  }
  REQUIRE(policy::domain_trigger("traffic", traffic_ref.r_overall, traffic_ref.t_overall,
                                 kMatrix));

  // Probe the next reference on a copy so the live node's state is untouched.
  auto probe_next_ref = [&](double at) {
    TestBench probe(AgentList{{"tr-1", "traffic"}});
    metrics::AgentRiskTrust ref;
    for (int round = 0; ; ++round) {
      double pts = round * 1.0;
      auto starve =
          probe.packet("tr-1", "traffic", pts, traffic_obs(pts, 25.0), {{"a", 0.9, 0.05}});
      probe.node->process_round({starve}, pts);
      ref = probe.node->latest_references().at("tr-1");
      if (pts >= at) break;
    }
    return ref;
  };
  auto next_ref = probe_next_ref(ts);

  // An admissible candidate right at the decayed reference, alongside a
  // weather report whose alert trigger is active: the reroute is denied.
  double ts2 = ts + 1.0;
  auto admissible = bench.packet("tr-1", "traffic", ts2, traffic_obs(ts2, 25.0),
                                 {{"a", next_ref.r_overall, next_ref.t_overall}});
  auto stormy = bench.packet("wx-1", "weather", ts2, weather_alert_obs(ts2, 0.9),
                             {{"a", 0.8, 0.59}});
  auto records = bench.node->process_round({admissible, stormy}, ts2);
  REQUIRE(records.size() == 2);
  const auto& traffic_rec = records[0];
  CHECK_FALSE(traffic_rec.unresolved);
  REQUIRE(traffic_rec.action.has_value());
  CHECK(*traffic_rec.action == "reroute");
  REQUIRE(traffic_rec.partner_domain.has_value());
  CHECK(*traffic_rec.partner_domain == "weather");
  REQUIRE(traffic_rec.decision.has_value());
  CHECK(traffic_rec.decision->verdict == policy::Verdict::deny);
  CHECK(traffic_rec.decision->reason == policy::Reason::cross_domain_violation);

  const auto& weather_rec = records[1];
  CHECK(policy::domain_trigger("weather", weather_rec.r_ref, weather_rec.t_ref, kMatrix));

  // Same shape with a calm, trusted weather report: the reroute goes through
  // on a fresh node replaying the same starvation prefix.
  TestBench calm_bench(AgentList{{"tr-1", "traffic"}, {"wx-1", "weather"}});
  for (int round = 0; round * 1.0 <= ts; ++round) {
    double pts = round * 1.0;
    auto starve =
        calm_bench.packet("tr-1", "traffic", pts, traffic_obs(pts, 25.0), {{"a", 0.9, 0.05}});
    calm_bench.node->process_round({starve}, pts);
  }
  auto admissible2 = calm_bench.packet("tr-1", "traffic", ts2, traffic_obs(ts2, 25.0),
                                       {{"a", next_ref.r_overall, next_ref.t_overall}});
  auto calm = calm_bench.packet("wx-1", "weather", ts2, weather_alert_obs(ts2, 1.3),
                                {{"a", 0.2, 0.7}});
  // calm context lifts weather trust above the alert band
  auto calm_records = calm_bench.node->process_round({admissible2, calm}, ts2);
  const auto& allowed = calm_records[0];
  REQUIRE(allowed.decision.has_value());
  CHECK(allowed.decision->reason != policy::Reason::cross_domain_violation);
}

TEST_CASE("replaying identical packets yields identical chains") {
  auto run_once = [] {
    TestBench bench(AgentList{{"tr-1", "traffic"}, {"fs-1", "fire"}});
    for (int round = 0; round < 6; ++round) {
      double ts = round * 0.5;
      auto p1 =
          bench.packet("tr-1", "traffic", ts, traffic_obs(ts, 20.0), {{"a", 0.8, 0.7}, {"b", 0.82, 0.71}});
      auto p2 = bench.packet("fs-1", "fire", ts, fire_obs(ts, 1, 0.4), {{"a", 0.9, 0.3}});
      bench.node->process_round({p1, p2}, ts);
    }
    std::vector<std::string> payloads;
    for (const auto& b : bench.chain->blocks())
      payloads.emplace_back(b.payload.begin(), b.payload.end());
    return payloads;
  };
  auto first = run_once();
  auto second = run_once();
  CHECK(first == second);
  CHECK(first.size() == 12);
}

TEST_CASE("chain height always equals the number of records emitted") {
  TestBench bench(AgentList{{"tr-1", "traffic"}});
  std::size_t expected = 0;
  for (int round = 0; round < 4; ++round) {
    double ts = round * 1.0;
    auto packet = bench.packet("tr-1", "traffic", ts, traffic_obs(ts, 10.0 + round * 5),
                               {{"a", testutil::unit_value(), testutil::unit_value()}});
    auto records = bench.node->process_round({packet}, ts);
    expected += records.size();
    CHECK(bench.chain->size() == expected);
  }
  CHECK(bench.node->counters().records == expected);
}
