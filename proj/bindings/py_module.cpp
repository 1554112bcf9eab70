#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "trustgov/analytics.hpp"
#include "trustgov/ledger.hpp"
#include "trustgov/metrics.hpp"
#include "trustgov/policy.hpp"
#include "trustgov/sim.hpp"

namespace py = pybind11;
using namespace trustgov;

namespace {

metrics::ContinuousSignals make_signals(const std::vector<std::tuple<double, double, double>>& v) {
  metrics::ContinuousSignals s;
  for (const auto& [value, baseline, tolerance] : v)
    s.indicators.push_back({value, baseline, tolerance});
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trust-governance engine: metric formulas, policy matrix operations, "
            "ledger verification and experiment entry points";

  // ---- trust metrics -------------------------------------------------------
  m.def(
      "env_risk_continuous",
      [](const std::vector<std::tuple<double, double, double>>& indicators) {
        return metrics::env_risk(make_signals(indicators));
      },
      py::arg("indicators"),
      "Fraction of (value, baseline, tolerance) indicators outside their band");
  m.def(
      "env_risk_capacity",
      [](double load, double threshold) {
        return metrics::env_risk(metrics::CapacityObservation{load, threshold});
      },
      py::arg("load"), py::arg("capacity_threshold"));
  m.def(
      "env_risk_hazard",
      [](int events) { return metrics::env_risk(metrics::HazardObservation{events}); },
      py::arg("event_count"));
  m.def(
      "reputation_trust",
      [](const std::vector<std::pair<double, bool>>& candidates) {
        std::vector<metrics::CandidateOutcome> v;
        for (const auto& [confidence, is_best] : candidates)
          v.push_back({confidence, is_best ? "aligned" : "divergent", is_best});
        return metrics::reputation_trust(v);
      },
      py::arg("candidates"), "Candidates as (confidence, agrees_with_best) pairs");
  m.def(
      "hrt_update",
      [](double prev, int success, double t_rept, double alpha, double beta, double delta,
         bool is_initial) {
        return metrics::hrt_update(prev, success, t_rept, {alpha, beta, delta}, is_initial);
      },
      py::arg("prev_t_hrt"), py::arg("success"), py::arg("t_rept"), py::arg("alpha") = 0.5,
      py::arg("beta") = 0.5, py::arg("delta") = 0.85, py::arg("is_initial") = false);
  m.def("service_risk", &metrics::service_risk, py::arg("prev_t_hrt"),
        py::arg("is_initial") = false);
  m.def("overall_risk", &metrics::overall_risk, py::arg("lambda_"), py::arg("r_env"),
        py::arg("r_service"));
  m.def(
      "contextual_trust",
      [](double t_base, const std::vector<std::pair<double, double>>& modifiers) {
        std::vector<metrics::ContextModifier> v;
        for (const auto& [value, weight] : modifiers) v.push_back({value, weight});
        return metrics::contextual_trust(t_base, v);
      },
      py::arg("t_base"), py::arg("modifiers"), "Modifiers as (value, weight) pairs");
  m.def("overall_trust", &metrics::overall_trust, py::arg("t_hrt"), py::arg("t_ctx"),
        py::arg("r_overall"));
  m.def(
      "ecosystem_metrics",
      [](const std::vector<std::pair<double, double>>& agents) {
        std::vector<metrics::AgentRiskTrust> v;
        int i = 0;
        for (const auto& [t, r] : agents) {
          metrics::AgentRiskTrust a;
          a.agent_id = "a" + std::to_string(i++);
          a.t_overall = t;
          a.r_overall = r;
          v.push_back(a);
        }
        auto snap = metrics::ecosystem_metrics(v);
        return std::make_pair(snap.t_ecosystem, snap.r_ecosystem);
      },
      py::arg("agents"), "Agents as (t_overall, r_overall) pairs; returns (mean trust, max risk)");

  // ---- policy --------------------------------------------------------------
  py::class_<policy::CandidateReport>(m, "CandidateReport")
      .def(py::init([](std::string model_id, double r, double t) {
             return policy::CandidateReport{std::move(model_id), r, t};
           }),
           py::arg("model_id"), py::arg("r"), py::arg("t"))
      .def_readwrite("model_id", &policy::CandidateReport::model_id)
      .def_readwrite("r", &policy::CandidateReport::r)
      .def_readwrite("t", &policy::CandidateReport::t);

  py::class_<policy::PolicyMatrix>(m, "PolicyMatrix")
      .def(py::init(&policy::PolicyMatrix::defaults))
      .def_static("defaults", &policy::PolicyMatrix::defaults)
      .def_static("load", &policy::PolicyMatrix::load, py::arg("path"))
      .def_readwrite("eps_r", &policy::PolicyMatrix::eps_r)
      .def_readwrite("eps_t", &policy::PolicyMatrix::eps_t)
      .def_readwrite("theta_t", &policy::PolicyMatrix::theta_t)
      .def_readwrite("theta_r", &policy::PolicyMatrix::theta_r)
      .def_readwrite("restrict_trust", &policy::PolicyMatrix::restrict_trust)
      .def_readwrite("tie_tolerance", &policy::PolicyMatrix::tie_tolerance)
      .def_readwrite("feedback_factor", &policy::PolicyMatrix::feedback_factor)
      .def_readwrite("joint_risk_trigger", &policy::PolicyMatrix::joint_risk_trigger)
      .def_readwrite("eco_risk_trigger", &policy::PolicyMatrix::eco_risk_trigger)
      .def_readwrite("eco_trust_floor", &policy::PolicyMatrix::eco_trust_floor)
      .def_readwrite("hysteresis", &policy::PolicyMatrix::hysteresis)
      .def_readwrite("cooldown_s", &policy::PolicyMatrix::cooldown_s)
      .def("tau", &policy::PolicyMatrix::tau, py::arg("domain"));

  m.def(
      "mae",
      [](const policy::CandidateReport& c, double r_ref, double t_ref) {
        return policy::mae(c, {r_ref, t_ref});
      },
      py::arg("candidate"), py::arg("r_ref"), py::arg("t_ref"));
  m.def(
      "admit",
      [](const policy::CandidateReport& c, double r_ref, double t_ref, const std::string& domain,
         const policy::PolicyMatrix& matrix) {
        return policy::admit(c, {r_ref, t_ref}, domain, matrix);
      },
      py::arg("candidate"), py::arg("r_ref"), py::arg("t_ref"), py::arg("domain"),
      py::arg("matrix") = policy::PolicyMatrix::defaults());
  m.def(
      "select",
      [](const std::vector<policy::CandidateReport>& candidates, double r_ref, double t_ref,
         const std::string& domain, const policy::PolicyMatrix& matrix)
          -> std::optional<std::pair<std::string, bool>> {
        auto sel = policy::select(candidates, {r_ref, t_ref}, domain, matrix);
        if (!sel) return std::nullopt;
        return std::make_pair(sel->model_id, sel->used_fallback);
      },
      py::arg("candidates"), py::arg("r_ref"), py::arg("t_ref"), py::arg("domain"),
      py::arg("matrix") = policy::PolicyMatrix::defaults(),
      "Returns (model_id, used_fallback) or None when nothing is admissible");
  m.def(
      "feedback",
      [](const policy::CandidateReport& c, double r_ref, double t_ref, double factor) {
        return policy::feedback(c, {r_ref, t_ref}, factor);
      },
      py::arg("candidate"), py::arg("r_ref"), py::arg("t_ref"), py::arg("factor") = 0.5);
  m.def(
      "decide",
      [](double r, double t, const policy::PolicyMatrix& matrix, bool cross_domain_ok) {
        auto d = policy::decide(r, t, matrix, cross_domain_ok);
        return std::make_pair(std::string(policy::to_string(d.verdict)),
                              std::string(policy::to_string(d.reason)));
      },
      py::arg("r"), py::arg("t"), py::arg("matrix") = policy::PolicyMatrix::defaults(),
      py::arg("cross_domain_ok") = true, "Returns (verdict, reason)");
  m.def(
      "domain_trigger",
      [](const std::string& domain, double r, double t, const policy::PolicyMatrix& matrix) {
        return policy::domain_trigger(domain, r, t, matrix);
      },
      py::arg("domain"), py::arg("r"), py::arg("t"),
      py::arg("matrix") = policy::PolicyMatrix::defaults());
  m.def(
      "joint_actuation",
      [](const std::vector<double>& risks, const policy::PolicyMatrix& matrix) {
        std::vector<metrics::AgentRiskTrust> agents;
        int i = 0;
        for (double r : risks) {
          metrics::AgentRiskTrust a;
          a.agent_id = "a" + std::to_string(i++);
          a.r_overall = r;
          agents.push_back(a);
        }
        return policy::joint_actuation(agents, matrix);
      },
      py::arg("risks"), py::arg("matrix") = policy::PolicyMatrix::defaults());

  // ---- analytics -----------------------------------------------------------
  m.def(
      "wilcoxon_signed_rank",
      [](const std::vector<double>& before, const std::vector<double>& after) {
        auto res = analytics::wilcoxon_signed_rank({before, after});
        return std::make_tuple(res.w, res.p_value, res.n_effective);
      },
      py::arg("before"), py::arg("after"), "Returns (W, p_value, n_effective)");
  m.def("erlang_c", &analytics::erlang_c, py::arg("arrival_rate"), py::arg("service_rate"),
        py::arg("servers"));
  m.def("erlang_c_wait_s", &analytics::erlang_c_wait_s, py::arg("arrival_rate"),
        py::arg("service_rate"), py::arg("servers"));
  m.def(
      "mmc_project",
      [](int agents, int requests, double throughput_rps, double et_ms, double d_ms,
         const std::vector<int>& targets, int servers, double contention) {
        analytics::MeasuredPoint measured{agents, requests, throughput_rps, et_ms, d_ms};
        auto rows = analytics::mmc_project(measured, targets, servers, contention);
        py::list out;
        for (const auto& p : rows) {
          py::dict d;
          d["agents"] = p.agents;
          d["saturated"] = p.saturated;
          d["utilization"] = p.utilization;
          d["throughput_rps"] = p.throughput_rps;
          d["et_ms"] = p.et_ms;
          d["d_ms"] = p.d_ms;
          out.append(d);
        }
        return out;
      },
      py::arg("agents"), py::arg("requests"), py::arg("throughput_rps"), py::arg("et_ms"),
      py::arg("d_ms"), py::arg("targets"), py::arg("servers") = 1,
      py::arg("contention") = analytics::kDefaultContention);

  // ---- ledger and experiments ----------------------------------------------
  m.def(
      "verify_chain",
      [](const std::filesystem::path& chain,
         const std::optional<std::filesystem::path>& keys) -> std::optional<std::uint64_t> {
        auto blocks = ledger::Chain::load_file(chain);
        std::optional<ledger::KeyRegistry> registry;
        if (keys) registry = ledger::KeyRegistry::load(*keys);
        return ledger::Chain::verify_blocks(
            std::span<const ledger::LedgerBlock>(blocks.data(), blocks.size()),
            registry ? &*registry : nullptr);
      },
      py::arg("chain"), py::arg("keys") = std::nullopt,
      "Returns the first bad height, or None when the chain verifies");
  m.def(
      "run_convergence",
      [](const std::optional<std::filesystem::path>& scenario_path,
         const std::optional<std::filesystem::path>& policy_path,
         const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed) {
        auto scenario =
            scenario_path ? sim::Scenario::load(*scenario_path) : sim::Scenario::default_desk();
        if (seed) scenario.seed = *seed;
        auto matrix = policy_path ? policy::PolicyMatrix::load(*policy_path)
                                  : policy::PolicyMatrix::defaults();
        auto result = sim::run_convergence(scenario, matrix, out_dir);
        py::dict out;
        py::list iterations;
        for (const auto& rep : result.iterations) {
          py::dict it;
          it["iteration"] = rep.iteration;
          py::dict mae;
          for (const auto& [agent, by_model] : rep.mae) {
            py::dict models;
            for (const auto& [model, values] : by_model) {
              double mean = 0.0;
              for (double v : values) mean += v;
              models[py::str(model)] = values.empty() ? 0.0 : mean / double(values.size());
            }
            mae[py::str(agent)] = models;
          }
          it["mean_mae"] = mae;
          it["fallbacks"] = rep.fallback_count;
          iterations.append(it);
        }
        out["iterations"] = iterations;
        out["records"] = result.counters.records;
        out["escalation_pending"] = result.escalation_pending;
        return out;
      },
      py::arg("scenario") = std::nullopt, py::arg("policy") = std::nullopt,
      py::arg("out_dir") = std::filesystem::path("out"), py::arg("seed") = std::nullopt);
}
