#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "trustgov/report.hpp"
#include "trustgov/sim.hpp"
#include "trustgov/util.hpp"
#include "trustgov/wire.hpp"

using namespace trustgov;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("trustgov_sim_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / double(v.size());
}

}  // namespace

TEST_CASE("the default desk scenario validates and loads from config identically") {
  auto scenario = sim::Scenario::default_desk();
  CHECK(scenario.agents.size() == 3);
  CHECK(scenario.iterations == 3);
  CHECK(scenario.requests_per_iteration == 20);
  for (const auto& a : scenario.agents) CHECK(a.observations.size() == 60);
}

TEST_CASE("scenario config can override every domain-profile constant") {
  auto dir = fresh_dir("profile_overrides");
  util::write_file(dir / "fire.csv", "t,detections,ctx_q\n0,1,1.0\n");
  util::write_file(dir / "scenario.json", R"({
    "agents": [{
      "id": "fs-x", "domain": "fire", "observations": "fire.csv",
      "lambda": 0.9, "t_base": 0.6,
      "hrt": {"alpha": 0.4, "beta": 0.6, "delta": 0.9},
      "reasoners": [{"model_id": "m"}]
    }]
  })");
  auto scenario = sim::Scenario::load(dir / "scenario.json");
  REQUIRE(scenario.agents.size() == 1);
  CHECK(scenario.agents[0].lambda == 0.9);
  CHECK(scenario.agents[0].t_base == 0.6);
  REQUIRE(scenario.agents[0].hrt.has_value());
  CHECK(scenario.agents[0].hrt->delta == 0.9);

  util::write_file(dir / "bad.json", R"({
    "agents": [{
      "id": "fs-x", "domain": "fire", "observations": "fire.csv",
      "lambda": 1.5,
      "reasoners": [{"model_id": "m"}]
    }]
  })");
  CHECK_THROWS_AS(sim::Scenario::load(dir / "bad.json"), util::InputError);
  fs::remove_all(dir);
}

TEST_CASE("scenario validation rejects malformed setups") {
  auto scenario = sim::Scenario::default_desk();
  scenario.agents[1].id = scenario.agents[0].id;
  CHECK_THROWS_AS(scenario.validate(), util::InputError);

  scenario = sim::Scenario::default_desk();
  scenario.agents[0].reasoners.clear();
  CHECK_THROWS_AS(scenario.validate(), util::InputError);

  scenario = sim::Scenario::default_desk();
  scenario.iterations = 0;
  CHECK_THROWS_AS(scenario.validate(), util::InputError);
}

TEST_CASE("convergence run reproduces the scripted dynamics") {
  auto scenario = sim::Scenario::default_desk();
  auto out = fresh_dir("convergence");
  auto result = sim::run_convergence(scenario, policy::PolicyMatrix::defaults(), out);

  REQUIRE(result.iterations.size() == 3);
  for (const auto& rep : result.iterations) {
    for (const auto& [agent, by_model] : rep.mae)
      for (const auto& [model, values] : by_model)
        CHECK(values.size() == std::size_t(scenario.requests_per_iteration));
  }

  SUBCASE("per-model iteration means are non-increasing in a noiseless run") {
    for (const auto& [agent, by_model] : result.iterations[0].mae) {
      for (const auto& [model, first] : by_model) {
        double prev = mean(first);
        for (std::size_t i = 1; i < result.iterations.size(); ++i) {
          double cur = mean(result.iterations[i].mae.at(agent).at(model));
          CHECK(cur <= prev + 1e-12);
          prev = cur;
        }
      }
    }
  }

  SUBCASE("fire fallback fades as feedback lifts candidates past the baseline") {
    CHECK(result.iterations[0].fallback_count.at("fs-1") == 20);
    CHECK(result.iterations[2].fallback_count.at("fs-1") == 0);
    CHECK(result.iterations[0].fallback_count.at("wx-1") == 0);
    CHECK(result.iterations[0].fallback_count.at("tr-1") == 0);
  }

  SUBCASE("escalation fires once, at the first high-risk round, needing confirmation") {
    CHECK(result.iterations[0].escalation_transitions == 1);
    CHECK(result.iterations[0].needs_human_events == 1);
    CHECK(result.iterations[1].escalation_transitions == 0);
    CHECK(result.iterations[2].escalation_transitions == 0);
    CHECK(result.escalation_pending);
    CHECK(fs::exists(out / "escalation_pending.json"));
  }

  SUBCASE("run artifacts are written") {
    for (const char* name : {"run.csv", "summary.md", "metrics.json", "analysis.csv", "report.md",
                             "packets.jsonl", "decisions.jsonl", "keys.json"})
      CHECK(fs::exists(out / name));
    CHECK(fs::exists(out / "chains" / "governance.log"));
    CHECK(fs::exists(out / "chains" / "agent_wx-1.log"));
  }

  SUBCASE("anchored chains verify against the saved keys") {
    auto registry = ledger::KeyRegistry::load(out / "keys.json");
    for (const char* chain : {"governance.log", "agent_wx-1.log", "agent_tr-1.log",
                              "agent_fs-1.log"}) {
      auto blocks = ledger::Chain::load_file(out / "chains" / chain);
      CHECK_FALSE(ledger::Chain::verify_blocks(
                      std::span<const ledger::LedgerBlock>(blocks.data(), blocks.size()),
                      &registry)
                      .has_value());
      // governance anchors one record per agent per round; each agent chain
      // anchors its own 60 local records
      CHECK(blocks.size() ==
            (std::string(chain) == "governance.log" ? 180u : 60u));
    }
  }

  SUBCASE("the run csv alone reproduces the in-memory MAE groupings") {
    auto from_csv = report::read_run_csv_mae(out / "run.csv");
    REQUIRE(from_csv.size() == result.iterations.size());
    for (std::size_t i = 0; i < from_csv.size(); ++i) {
      auto in_memory = sim::to_iteration_mae(result.iterations[i]);
      REQUIRE(from_csv[i].size() == in_memory.size());
      for (const auto& [agent, by_model] : in_memory) {
        for (const auto& [model, values] : by_model) {
          const auto& csv_values = from_csv[i].at(agent).at(model);
          REQUIRE(csv_values.size() == values.size());
          for (std::size_t k = 0; k < values.size(); ++k)
            CHECK(csv_values[k] == values[k]);  // shortest round-trip form is exact
        }
      }
    }
  }

  SUBCASE("the traffic reference risk holds its plateau window") {
    std::ifstream in(out / "decisions.jsonl");
    auto records = wire::read_records_jsonl(in);
    int seen = 0;
    for (const auto& rec : records) {
      if (rec.domain != scenario.plateau.domain) continue;
      if (int(rec.round) >= scenario.plateau.rounds) continue;
      CHECK(rec.r_ref >= scenario.plateau.lo);
      CHECK(rec.r_ref <= scenario.plateau.hi);
      ++seen;
    }
    CHECK(seen == scenario.plateau.rounds);
  }

  SUBCASE("the fire agent swings from high-risk/low-trust to low-risk/high-trust") {
    std::ifstream in(out / "decisions.jsonl");
    auto records = wire::read_records_jsonl(in);
    const wire::DecisionRecord* first_fire = nullptr;
    const wire::DecisionRecord* last_fire = nullptr;
    for (const auto& rec : records) {
      if (rec.domain != "fire" || rec.rejected) continue;
      if (!first_fire) first_fire = &rec;
      last_fire = &rec;
    }
    REQUIRE(first_fire);
    CHECK(first_fire->r_ref >= 0.85);
    CHECK(first_fire->t_ref <= 0.30);
    CHECK(last_fire->r_ref <= 0.10);
    CHECK(last_fire->t_ref >= 0.65);
  }

  fs::remove_all(out);
}

TEST_CASE("unresolved rounds are recorded, not fatal") {
  auto scenario = sim::Scenario::default_desk();
  // push every weather reasoner's trust far out of tolerance
  for (auto& r : scenario.agents[0].reasoners) r.bias_t = -0.30;
  scenario.iterations = 1;
  auto out = fresh_dir("unresolved");
  auto result = sim::run_convergence(scenario, policy::PolicyMatrix::defaults(), out);
  CHECK(result.iterations[0].unresolved_rounds == 20);
  CHECK(result.counters.unresolved_rounds == 20);
  fs::remove_all(out);
}

TEST_CASE("performance runs satisfy their accounting identities") {
  auto scenario = sim::Scenario::default_desk();
  auto out = fresh_dir("perf");
  auto points = sim::run_performance(scenario, policy::PolicyMatrix::defaults(), {40, 90}, 3, out);
  REQUIRE(points.size() == 2);
  for (const auto& p : points) {
    CHECK(p.throughput_rps * p.span_s == doctest::Approx(double(p.requests)).epsilon(1e-9));
    CHECK(p.et_ms == doctest::Approx(scenario.costs.fetch + scenario.costs.compute +
                                     scenario.costs.agent_chain_log)
                         .epsilon(1e-12));
    CHECK(p.d_ms == doctest::Approx(scenario.costs.validate + scenario.costs.mae_select +
                                    scenario.costs.feedback + scenario.costs.final_decision +
                                    scenario.costs.gov_chain_log)
                        .epsilon(1e-12));
    CHECK(p.mean_gov_wait_ms >= 0.0);
  }
  CHECK(fs::exists(out / "perf.csv"));
  auto reread = report::read_perf_csv(out / "perf.csv");
  REQUIRE(reread.size() == 2);
  CHECK(reread[0].requests == 40);
  CHECK(reread[1].requests == 90);
  CHECK(reread[0].throughput_rps == doctest::Approx(points[0].throughput_rps).epsilon(1e-12));
  fs::remove_all(out);
}

TEST_CASE("performance scales the agent fleet by cloning scenario agents") {
  auto scenario = sim::Scenario::default_desk();
  auto out = fresh_dir("perf_clone");
  auto points = sim::run_performance(scenario, policy::PolicyMatrix::defaults(), {30}, 6, out);
  REQUIRE(points.size() == 1);
  CHECK(points[0].agents == 6);
  CHECK(fs::exists(out / "n30" / "chains" / "agent_wx-1-c2.log"));
  fs::remove_all(out);
}
