#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "trustgov/policy.hpp"
#include "trustgov/util.hpp"

using namespace trustgov;
using policy::CandidateReport;
using policy::PolicyMatrix;
using policy::Reference;

namespace {
const PolicyMatrix kMatrix = PolicyMatrix::defaults();
}

TEST_CASE("mae is half the summed absolute deviations") {
  CHECK(policy::mae({"m", 0.3, 0.7}, {0.3, 0.7}) == 0.0);
  CHECK(policy::mae({"m", 0.2, 0.6}, {0.3, 0.7}) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(policy::mae({"m", 1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("admit applies inclusive tolerance and baseline bounds") {
  // risk delta exactly on the bound (built as an exact double) -> admitted
  CHECK(policy::admit({"m", 0.07, 0.6}, {0.0, 0.6}, "weather", kMatrix));
  // nudged past -> rejected
  CHECK_FALSE(policy::admit({"m", 0.0701, 0.6}, {0.0, 0.6}, "weather", kMatrix));
  // trust delta exactly on the bound, isolated by a zeroed baseline
  policy::PolicyMatrix zero_tau = kMatrix;
  zero_tau.tau_t["weather"] = 0.0;
  CHECK(policy::admit({"m", 0.0, 0.05}, {0.0, 0.0}, "weather", zero_tau));
  CHECK_FALSE(policy::admit({"m", 0.0, 0.0501}, {0.0, 0.0}, "weather", zero_tau));
  // baseline is inclusive: T == tau admits, just below does not
  CHECK(policy::admit({"m", 0.5, 0.6}, {0.5, 0.6}, "weather", kMatrix));
  CHECK_FALSE(policy::admit({"m", 0.5, 0.59}, {0.5, 0.59}, "weather", kMatrix));
  // the same trust clears the lower traffic baseline
  CHECK(policy::admit({"m", 0.5, 0.59}, {0.5, 0.59}, "traffic", kMatrix));
  CHECK_THROWS_AS(policy::admit({"m", 0.5, 0.6}, {0.5, 0.6}, "energy", kMatrix),
                  util::ConfigError);
}

TEST_CASE("select picks the highest admitted trust") {
  Reference ref{0.5, 0.75};
  std::vector<CandidateReport> cands = {
      {"a", 0.5, 0.71}, {"b", 0.5, 0.79}, {"c", 0.5, 0.75}};
  auto sel = policy::select(cands, ref, "weather", kMatrix);
  REQUIRE(sel.has_value());
  CHECK(sel->model_id == "b");
  CHECK_FALSE(sel->used_fallback);
}

TEST_CASE("select resolves near-ties by risk closeness, then model id") {
  Reference ref{0.5, 0.70};
  std::vector<CandidateReport> cands = {{"a", 0.52, 0.700}, {"b", 0.51, 0.705}};
  auto sel = policy::select(cands, ref, "weather", kMatrix);
  REQUIRE(sel.has_value());
  CHECK(sel->model_id == "b");

  // identical trust and risk distance: ascending model id wins
  cands = {{"zeta", 0.52, 0.70}, {"alpha", 0.48, 0.70}};
  sel = policy::select(cands, ref, "weather", kMatrix);
  REQUIRE(sel.has_value());
  CHECK(sel->model_id == "alpha");
}

TEST_CASE("select falls back for fire only") {
  Reference ref{0.5, 0.9};  // trust deltas too large for admission
  std::vector<CandidateReport> cands = {{"a", 0.5, 0.60}, {"b", 0.5, 0.66}, {"c", 0.5, 0.70}};
  auto sel = policy::select(cands, ref, "fire", kMatrix);
  REQUIRE(sel.has_value());
  CHECK(sel->model_id == "b");  // nearest above tau = 0.65
  CHECK(sel->used_fallback);

  // none at or above tau: nearest to tau
  cands = {{"a", 0.5, 0.40}, {"b", 0.5, 0.62}, {"c", 0.5, 0.30}};
  sel = policy::select(cands, ref, "fire", kMatrix);
  REQUIRE(sel.has_value());
  CHECK(sel->model_id == "b");
  CHECK(sel->used_fallback);

  // weather/traffic get no fallback
  CHECK_FALSE(policy::select(cands, ref, "weather", kMatrix).has_value());
  CHECK_FALSE(policy::select(cands, ref, "traffic", kMatrix).has_value());

  CHECK_THROWS_AS(policy::select({}, ref, "fire", kMatrix), util::InputError);
}

TEST_CASE("select never returns a non-admitted candidate without the fire fallback") {
  for (int trial = 0; trial < 2000; ++trial) {
    Reference ref{testutil::unit_value(), testutil::unit_value()};
    std::vector<CandidateReport> cands;
    int n = testutil::int_in(1, 5);
    for (int i = 0; i < n; ++i)
      cands.push_back({"m" + std::to_string(i), testutil::unit_value(), testutil::unit_value()});
    const char* domains[] = {"weather", "traffic", "fire"};
    std::string domain = domains[testutil::int_in(0, 2)];

    auto sel = policy::select(cands, ref, domain, kMatrix);
    if (!sel) {
      CHECK(domain != "fire");
      for (const auto& c : cands) CHECK_FALSE(policy::admit(c, ref, domain, kMatrix));
      continue;
    }
    const auto& chosen = *std::find_if(cands.begin(), cands.end(),
                                       [&](const auto& c) { return c.model_id == sel->model_id; });
    if (sel->used_fallback) {
      CHECK(domain == "fire");
      for (const auto& c : cands) CHECK_FALSE(policy::admit(c, ref, domain, kMatrix));
    } else {
      CHECK(policy::admit(chosen, ref, domain, kMatrix));
    }
    // determinism
    auto again = policy::select(cands, ref, domain, kMatrix);
    REQUIRE(again.has_value());
    CHECK(again->model_id == sel->model_id);
    CHECK(again->used_fallback == sel->used_fallback);
  }
}

TEST_CASE("feedback halves the error and clips to the unit interval") {
  auto adjusted = policy::feedback({"m", 0.2, 0.6}, {0.3, 0.7});
  CHECK(adjusted.r == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(adjusted.t == doctest::Approx(0.65).epsilon(1e-15));
  CHECK(adjusted.model_id == "m");

  adjusted = policy::feedback({"m", 0.3, 0.7}, {0.3, 0.7});
  CHECK(adjusted.r == 0.3);
  CHECK(adjusted.t == 0.7);

  adjusted = policy::feedback({"m", 0.0, 0.95}, {0.0, 1.0});
  CHECK(adjusted.t == doctest::Approx(0.975).epsilon(1e-15));
}

TEST_CASE("feedback contracts the MAE by exactly the adjustment factor") {
  for (int trial = 0; trial < 1000; ++trial) {
    CandidateReport c{"m", testutil::unit_value(), testutil::unit_value()};
    Reference ref{testutil::unit_value(), testutil::unit_value()};
    double before = policy::mae(c, ref);
    double after = policy::mae(policy::feedback(c, ref), ref);
    // unclipped by construction: the midpoint of two unit-interval values
    // stays inside the interval
    CHECK(after == doctest::Approx(0.5 * before).epsilon(1e-12));
    CHECK(after <= 0.5 * before + 1e-12);
  }
}

TEST_CASE("decide walks deny, restrict, approve in order") {
  auto d = policy::decide(0.2, 0.45, kMatrix);
  CHECK(d.verdict == policy::Verdict::deny);
  CHECK(d.reason == policy::Reason::trust_below_theta);

  d = policy::decide(0.2, 0.69, kMatrix);
  CHECK(d.verdict == policy::Verdict::restrict);
  CHECK(d.reason == policy::Reason::low_trust_restrict);

  d = policy::decide(0.81, 0.9, kMatrix);
  CHECK(d.verdict == policy::Verdict::restrict);
  CHECK(d.reason == policy::Reason::high_risk_restrict);

  d = policy::decide(0.3, 0.9, kMatrix);
  CHECK(d.verdict == policy::Verdict::approve);
  CHECK(d.reason == policy::Reason::admitted);

  d = policy::decide(0.3, 0.9, kMatrix, false);
  CHECK(d.verdict == policy::Verdict::deny);
  CHECK(d.reason == policy::Reason::cross_domain_violation);
}

TEST_CASE("decide is total and monotone") {
  auto rank = [](policy::Verdict v) {
    switch (v) {
      case policy::Verdict::deny: return 0;
      case policy::Verdict::restrict: return 1;
      case policy::Verdict::approve: return 2;
    }
    return -1;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    double r = testutil::unit_value();
    double t = testutil::unit_value();
    auto d = policy::decide(r, t, kMatrix);
    CHECK(rank(d.verdict) >= 0);

    double t_up = testutil::value_in(t, 1.0);
    CHECK(rank(policy::decide(r, t_up, kMatrix).verdict) >= rank(d.verdict));
    double r_up = testutil::value_in(r, 1.0);
    CHECK(rank(policy::decide(r_up, t, kMatrix).verdict) <= rank(d.verdict));
  }
}

TEST_CASE("domain triggers keep their printed operators") {
  CHECK(policy::domain_trigger("weather", 0.61, 0.64, kMatrix));
  CHECK_FALSE(policy::domain_trigger("weather", 0.60, 0.64, kMatrix));  // strict >
  CHECK_FALSE(policy::domain_trigger("traffic", 0.95, 0.65, kMatrix));  // trust not < 0.65
  CHECK(policy::domain_trigger("traffic", 0.95, 0.6499, kMatrix));      // inclusive >=
  CHECK(policy::domain_trigger("fire", 0.95, 0.66, kMatrix));
  CHECK_FALSE(policy::domain_trigger("fire", 0.95, 0.65, kMatrix));  // strict >
  CHECK_THROWS_AS(policy::domain_trigger("energy", 0.5, 0.5, kMatrix), util::ConfigError);
}

TEST_CASE("domain triggers match a brute-force transcription") {
  for (int trial = 0; trial < 3000; ++trial) {
    double r = testutil::unit_value();
    double t = testutil::unit_value();
    CHECK(policy::domain_trigger("weather", r, t, kMatrix) == (r > 0.60 && t < 0.65));
    CHECK(policy::domain_trigger("traffic", r, t, kMatrix) == (r >= 0.95 && t < 0.65));
    CHECK(policy::domain_trigger("fire", r, t, kMatrix) == (r >= 0.95 && t > 0.65));
  }
}

namespace {
metrics::AgentRiskTrust agent_with_risk(const std::string& id, double r) {
  metrics::AgentRiskTrust a;
  a.agent_id = id;
  a.r_overall = r;
  a.t_overall = 0.5;
  return a;
}
}  // namespace

TEST_CASE("joint actuation needs two agents strictly past the trigger") {
  CHECK(policy::joint_actuation(
      {agent_with_risk("a", 0.85), agent_with_risk("b", 0.82), agent_with_risk("c", 0.1)},
      kMatrix));
  CHECK_FALSE(policy::joint_actuation({agent_with_risk("a", 0.85), agent_with_risk("b", 0.80)},
                                      kMatrix));
  CHECK_FALSE(policy::joint_actuation({agent_with_risk("a", 0.99)}, kMatrix));
  CHECK_FALSE(policy::joint_actuation({}, kMatrix));
}

TEST_CASE("cross_domain_ok requires a quiet admitted partner") {
  policy::CrossDomainAction reroute{"reroute", {"weather"}};
  std::map<std::string, metrics::AgentRiskTrust> round;

  // missing partner state
  CHECK_FALSE(policy::cross_domain_ok(reroute, round, kMatrix));

  // fresh weather report, trigger quiet
  metrics::AgentRiskTrust wx;
  wx.agent_id = "wx";
  wx.r_overall = 0.2;
  wx.t_overall = 0.8;
  round["weather"] = wx;
  CHECK(policy::cross_domain_ok(reroute, round, kMatrix));

  // weather trigger active blocks the reroute
  round["weather"].r_overall = 0.7;
  round["weather"].t_overall = 0.6;
  CHECK_FALSE(policy::cross_domain_ok(reroute, round, kMatrix));

  // actions with no partners pass vacuously
  CHECK(policy::cross_domain_ok({"advisory", {}}, {}, kMatrix));
}

TEST_CASE("policy defaults carry the shipped matrix constants") {
  const auto& m = kMatrix;
  CHECK(m.eps_r == 0.07);
  CHECK(m.eps_t == 0.05);
  CHECK(m.tau("weather") == 0.60);
  CHECK(m.tau("traffic") == 0.55);
  CHECK(m.tau("fire") == 0.65);
  CHECK(m.tie_tolerance == 0.01);
  CHECK(m.feedback_factor == 0.5);
  CHECK(m.theta_t == 0.5);
  CHECK(m.theta_r == 0.8);
  CHECK(m.restrict_trust == 0.7);
  CHECK(m.joint_risk_trigger == 0.80);
  CHECK(m.joint_min_agents == 2);
  CHECK(m.eco_risk_trigger == 0.70);
  CHECK(m.eco_trust_floor == 0.60);
  CHECK(m.hysteresis == 0.05);
  CHECK(m.cooldown_s == 900.0);
  CHECK(m.fallback_domain == "fire");
  CHECK_THROWS_AS(m.tau("health"), util::ConfigError);
}

TEST_CASE("the shipped policy config reproduces the defaults") {
  auto loaded =
      PolicyMatrix::load(std::filesystem::path(TRUSTGOV_SOURCE_DIR) / "configs" /
                         "policy_default.json");
  CHECK(policy::policy_to_json(loaded) == policy::policy_to_json(kMatrix));
}

TEST_CASE("policy json round-trips through a file") {
  auto path = std::filesystem::temp_directory_path() / "trustgov_policy_roundtrip.json";
  util::write_file(path, policy::policy_to_json(kMatrix));
  auto loaded = PolicyMatrix::load(path);
  CHECK(policy::policy_to_json(loaded) == policy::policy_to_json(kMatrix));
  std::filesystem::remove(path);
}
