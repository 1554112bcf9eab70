#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trustgov/analytics.hpp"
#include "trustgov/ledger.hpp"
#include "trustgov/policy.hpp"
#include "trustgov/report.hpp"
#include "trustgov/sim.hpp"
#include "trustgov/util.hpp"

namespace fs = std::filesystem;
using namespace trustgov;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerifyFailed = 2;
constexpr int kExitRuntime = 3;

fs::path default_out_dir() {
  if (const char* env = std::getenv("TRUSTGOV_OUTPUT_DIR")) return fs::path(env);
  return fs::path("out");
}

sim::Scenario load_scenario(const std::string& spec) {
  if (spec == "default") return sim::Scenario::default_desk();
  return sim::Scenario::load(spec);
}

policy::PolicyMatrix load_policy(const std::string& path) {
  if (path.empty()) return policy::PolicyMatrix::defaults();
  return policy::PolicyMatrix::load(path);
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(int(util::parse_int(item)));
  }
  util::require(!out.empty(), "expected a comma-separated list of integers");
  return out;
}

struct RunFlags {
  std::string scenario = "default";
  std::string policy_path;
  std::string out_dir = default_out_dir().string();
  std::uint64_t seed = 0;
  bool seed_set = false;
  int iterations = 0;
  int requests = 0;
  double noise = -1.0;
  std::string anchor_mode;
};

void apply_flags(sim::Scenario& scenario, const RunFlags& flags) {
  if (flags.seed_set) scenario.seed = flags.seed;
  if (flags.iterations > 0) scenario.iterations = flags.iterations;
  if (flags.requests > 0) scenario.requests_per_iteration = flags.requests;
  if (flags.noise >= 0.0) scenario.noise_override = flags.noise;
  if (!flags.anchor_mode.empty()) {
    if (flags.anchor_mode == "sync" || flags.anchor_mode == "synchronous")
      scenario.agent_anchor_mode = ledger::AnchorMode::synchronous;
    else if (flags.anchor_mode == "batched")
      scenario.agent_anchor_mode = ledger::AnchorMode::batched;
    else
      throw util::ConfigError("unknown anchor mode: " + flags.anchor_mode);
  }
}

void add_common_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--scenario", flags.scenario, "Scenario file, or 'default'");
  cmd->add_option("--policy", flags.policy_path, "Policy matrix config file");
  cmd->add_option("--out", flags.out_dir, "Output directory");
  cmd->add_option("--seed", flags.seed, "Override the scenario seed")
      ->each([&flags](const std::string&) { flags.seed_set = true; });
  cmd->add_option("--iterations", flags.iterations, "Override iteration count");
  cmd->add_option("--requests", flags.requests, "Override requests per iteration");
  cmd->add_option("--noise", flags.noise, "Override reasoner noise amplitude");
  cmd->add_option("--anchor-mode", flags.anchor_mode, "Agent chain anchoring: sync or batched");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trust-governance engine and multi-agent simulation harness"};
  app.require_subcommand(1);

  RunFlags conv_flags;
  auto* conv = app.add_subcommand("run-convergence",
                                  "Run the convergence experiment and write run artifacts");
  add_common_flags(conv, conv_flags);

  RunFlags perf_flags;
  std::string perf_sizes = "100";
  int perf_agents = 3;
  bool perf_wall_clock = false;
  auto* perf = app.add_subcommand("run-perf", "Run performance workloads on the simulated clock");
  add_common_flags(perf, perf_flags);
  perf->add_option("--sizes", perf_sizes, "Comma-separated workload sizes");
  perf->add_option("--agents", perf_agents, "Agent count");
  perf->add_flag("--wall-clock", perf_wall_clock,
                 "Record real elapsed time per workload in metrics.json");

  std::string proj_agents = "3,6,9";
  std::string proj_measured;
  std::string proj_out = default_out_dir().string();
  double proj_contention = analytics::kDefaultContention;
  int proj_servers = 1;
  std::size_t proj_row = 0;
  auto* proj = app.add_subcommand("project-scale",
                                  "Queueing projection of throughput and delay to larger fleets");
  proj->add_option("--agents", proj_agents, "Comma-separated target agent counts");
  proj->add_option("--from-measured", proj_measured, "perf.csv from a run-perf invocation")
      ->required();
  proj->add_option("--out", proj_out, "Output directory");
  proj->add_option("--contention", proj_contention, "Agent-side contention factor per step");
  proj->add_option("--servers", proj_servers, "Governance servers in the queueing model");
  proj->add_option("--row", proj_row, "Row of the perf csv to calibrate from (0-based)");

  std::string verify_chain_path;
  std::string verify_keys;
  auto* verify = app.add_subcommand("verify-chain", "Verify a chain file's digests and signatures");
  verify->add_option("--chain", verify_chain_path, "Chain log file")->required();
  verify->add_option("--keys", verify_keys, "keys.json with author secrets");

  std::string export_chain_path;
  std::string export_out;
  auto* exp = app.add_subcommand("export", "Export a chain as line-delimited records");
  exp->add_option("--chain", export_chain_path, "Chain log file")->required();
  exp->add_option("--out", export_out, "Output file (stdout when omitted)");

  std::string ack_run_dir;
  auto* ack = app.add_subcommand("ack-escalation",
                                 "Acknowledge a run halted awaiting human confirmation");
  ack->add_option("--run", ack_run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return kExitOk;
    }
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (conv->parsed()) {
      auto scenario = load_scenario(conv_flags.scenario);
      apply_flags(scenario, conv_flags);
      auto matrix = load_policy(conv_flags.policy_path);
      auto result = sim::run_convergence(scenario, matrix, conv_flags.out_dir);
      std::cout << "convergence run complete: " << result.iterations.size() << " iterations, "
                << result.counters.records << " records anchored -> " << conv_flags.out_dir
                << "\n";
      if (result.escalation_pending)
        std::cout << "note: escalation awaiting human confirmation (see "
                     "escalation_pending.json; acknowledge with ack-escalation)\n";
      return kExitOk;
    }

    if (perf->parsed()) {
      auto scenario = load_scenario(perf_flags.scenario);
      apply_flags(scenario, perf_flags);
      auto matrix = load_policy(perf_flags.policy_path);
      auto sizes = parse_int_list(perf_sizes);
      auto points = sim::run_performance(scenario, matrix, sizes, perf_agents,
                                         perf_flags.out_dir, perf_wall_clock);
      for (const auto& p : points)
        std::cout << p.requests << " requests, " << p.agents << " agents: "
                  << util::fmt_double(p.throughput_rps) << " req/s, ET "
                  << util::fmt_double(p.et_ms) << " ms, D " << util::fmt_double(p.d_ms) << " ms\n";
      return kExitOk;
    }

    if (proj->parsed()) {
      auto points = report::read_perf_csv(proj_measured);
      util::require(proj_row < points.size(), "perf csv row out of range");
      const auto& p = points[proj_row];
      analytics::MeasuredPoint measured{p.agents, p.requests, p.throughput_rps, p.et_ms, p.d_ms};
      auto targets = parse_int_list(proj_agents);
      auto projections = analytics::mmc_project(measured, targets, proj_servers, proj_contention);
      fs::create_directories(proj_out);
      report::write_projection(proj_out, measured, projections);
      for (const auto& pr : projections) {
        if (pr.saturated)
          std::cout << pr.agents << " agents: saturated (utilization "
                    << util::fmt_double(pr.utilization) << ")\n";
        else
          std::cout << pr.agents << " agents: " << util::fmt_double(pr.throughput_rps)
                    << " req/s, ET " << util::fmt_double(pr.et_ms) << " ms, D "
                    << util::fmt_double(pr.d_ms) << " ms\n";
      }
      return kExitOk;
    }

    if (verify->parsed()) {
      auto blocks = ledger::Chain::load_file(verify_chain_path);
      std::optional<ledger::KeyRegistry> registry;
      fs::path keys = verify_keys.empty()
                          ? fs::path(verify_chain_path).parent_path().parent_path() / "keys.json"
                          : fs::path(verify_keys);
      if (fs::exists(keys)) registry = ledger::KeyRegistry::load(keys);
      auto bad = ledger::Chain::verify_blocks(
          std::span<const ledger::LedgerBlock>(blocks.data(), blocks.size()),
          registry ? &*registry : nullptr);
      if (bad) {
        std::cout << "first bad height: " << *bad << "\n";
        return kExitVerifyFailed;
      }
      std::cout << "ok, height " << blocks.size()
                << (registry ? "" : " (structure only, no keys file found)") << "\n";
      return kExitOk;
    }

    if (exp->parsed()) {
      auto blocks = ledger::Chain::load_file(export_chain_path);
      if (export_out.empty()) {
        ledger::Chain::export_jsonl(
            std::span<const ledger::LedgerBlock>(blocks.data(), blocks.size()), std::cout);
      } else {
        std::ofstream out(export_out);
        util::require(bool(out), "cannot open output file: " + export_out);
        ledger::Chain::export_jsonl(
            std::span<const ledger::LedgerBlock>(blocks.data(), blocks.size()), out);
      }
      return kExitOk;
    }

    if (ack->parsed()) {
      fs::path pending = fs::path(ack_run_dir) / "escalation_pending.json";
      if (!fs::exists(pending)) {
        std::cerr << "no escalation awaiting confirmation in " << ack_run_dir << "\n";
        return kExitRuntime;
      }
      std::cout << "confirmation token: " << std::flush;
      std::string token;
      if (!std::getline(std::cin, token) || token.empty()) {
        std::cerr << "no confirmation token read\n";
        return kExitRuntime;
      }
      nlohmann::json ackj = {{"token", token}, {"status", "acknowledged"}};
      util::write_file(fs::path(ack_run_dir) / "escalation_ack.json", ackj.dump(2) + "\n");
      fs::remove(pending);
      std::cout << "escalation acknowledged\n";
      return kExitOk;
    }
  } catch (const util::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  std::cerr << app.help();
  return kExitUsage;
}
