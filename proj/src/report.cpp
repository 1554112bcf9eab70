#include "trustgov/report.hpp"

#include <cmath>
#include <sstream>

#include "trustgov/util.hpp"

namespace trustgov::report {

namespace fs = std::filesystem;
using util::fmt_double;

std::vector<WilcoxonRow> wilcoxon_rows(const std::vector<sim::IterationReport>& iterations) {
  std::vector<WilcoxonRow> rows;
  for (std::size_t k = 0; k + 1 < iterations.size(); ++k) {
    const auto& before_iter = iterations[k];
    const auto& after_iter = iterations[k + 1];
    for (const auto& [agent, by_model] : before_iter.mae) {
      for (const auto& [model, before] : by_model) {
        WilcoxonRow row;
        row.agent = agent;
        row.model = model;
        row.transition = std::to_string(k) + "->" + std::to_string(k + 1);
        analytics::PairedSample sample{before, after_iter.mae.at(agent).at(model)};
        row.result = analytics::wilcoxon_signed_rank(sample);
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

namespace {

std::string fmt_or(const std::optional<double>& v, const char* fallback) {
  return v ? fmt_double(*v) : std::string(fallback);
}

std::string pct(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(1);
  ss << *v * 100.0 << "%";
  return ss.str();
}

}  // namespace

void write_run_analysis(const fs::path& out_dir,
                        const std::vector<sim::IterationReport>& iterations,
                        const std::string& baseline_model) {
  if (iterations.size() < 2) {
    util::write_file(out_dir / "analysis.csv",
                     "kind,agent,model,transition,mean_first,mean_final,reduction,w,p_value,"
                     "n_effective\n");
    util::write_file(out_dir / "report.md",
                     "# Run analysis\n\nA single iteration carries no reduction or paired-test "
                     "statistics; run with at least two iterations.\n");
    return;
  }
  std::vector<analytics::IterationMae> mae;
  mae.reserve(iterations.size());
  for (const auto& it : iterations) mae.push_back(sim::to_iteration_mae(it));
  auto reduction = analytics::mae_reduction(mae, baseline_model);
  auto wilcoxon = wilcoxon_rows(iterations);

  std::ostringstream csv;
  csv << "kind,agent,model,transition,mean_first,mean_final,reduction,w,p_value,n_effective\n";
  for (const auto& row : reduction.per_agent)
    csv << "reduction," << row.agent << ',' << row.model << ",," << fmt_double(row.mean_first)
        << ',' << fmt_double(row.mean_final) << ',' << fmt_or(row.reduction, "") << ",,,\n";
  for (const auto& row : reduction.pooled)
    csv << "reduction-pooled,all," << row.model << ",," << fmt_double(row.mean_first) << ','
        << fmt_double(row.mean_final) << ',' << fmt_or(row.reduction, "") << ",,,\n";
  for (const auto& [agent, v] : reduction.baseline_mean)
    csv << "baseline," << agent << ',' << reduction.baseline_model << ",,,," << fmt_double(v)
        << ",,,\n";
  for (const auto& [agent, v] : reduction.oracle_mean)
    csv << "oracle," << agent << ",,,,," << fmt_double(v) << ",,,\n";
  for (const auto& row : wilcoxon)
    csv << "wilcoxon," << row.agent << ',' << row.model << ',' << row.transition << ",,,,"
        << fmt_double(row.result.w) << ',' << fmt_double(row.result.p_value) << ','
        << row.result.n_effective << '\n';
  util::write_file(out_dir / "analysis.csv", csv.str());

  std::ostringstream md;
  md << "# Run analysis\n\n";

  md << "## MAE reduction per agent and model\n\n";
  md << "| Agent | Model | Mean MAE (iter 0) | Mean MAE (final) | Reduction |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& row : reduction.per_agent)
    md << "| " << row.agent << " | " << row.model << " | " << fmt_double(row.mean_first) << " | "
       << fmt_double(row.mean_final) << " | " << pct(row.reduction) << " |\n";
  md << "\n## MAE reduction pooled across agents\n\n";
  md << "| Model | Mean MAE (iter 0) | Mean MAE (final) | Reduction |\n";
  md << "|---|---|---|---|\n";
  for (const auto& row : reduction.pooled)
    md << "| " << row.model << " | " << fmt_double(row.mean_first) << " | "
       << fmt_double(row.mean_final) << " | " << pct(row.reduction) << " |\n";

  md << "\n## Single-model baseline vs oracle selection\n\n";
  md << "| Agent | Baseline (" << reduction.baseline_model << ") mean MAE | Oracle mean MAE |\n";
  md << "|---|---|---|\n";
  for (const auto& [agent, v] : reduction.baseline_mean)
    md << "| " << agent << " | " << fmt_double(v) << " | "
       << fmt_double(reduction.oracle_mean.at(agent)) << " |\n";

  md << "\n## Wilcoxon signed-rank tests on per-request MAE\n\n";
  md << "| Agent | Model | Iterations | W | p (two-sided) | n |\n";
  md << "|---|---|---|---|---|---|\n";
  for (const auto& row : wilcoxon)
    md << "| " << row.agent << " | " << row.model << " | " << row.transition << " | "
       << fmt_double(row.result.w) << " | " << fmt_double(row.result.p_value) << " | "
       << row.result.n_effective << " |\n";

  util::write_file(out_dir / "report.md", md.str());
}

void write_convergence_summary(const fs::path& out_dir, const sim::ConvergenceResult& result) {
  std::ostringstream md;
  md << "# Convergence run summary\n\n";
  for (const auto& rep : result.iterations) {
    md << "## Iteration " << rep.iteration << "\n\n";
    md << "| Agent | Model | Mean MAE | Selections | Fallbacks (agent) |\n";
    md << "|---|---|---|---|---|\n";
    for (const auto& [agent, by_model] : rep.mae) {
      for (const auto& [model, values] : by_model) {
        double mean = 0.0;
        for (double v : values) mean += v;
        if (!values.empty()) mean /= double(values.size());
        int selections = 0;
        auto ait = rep.selections.find(agent);
        if (ait != rep.selections.end()) {
          auto mit = ait->second.find(model);
          if (mit != ait->second.end()) selections = mit->second;
        }
        int fallbacks = 0;
        auto fit = rep.fallback_count.find(agent);
        if (fit != rep.fallback_count.end()) fallbacks = fit->second;
        md << "| " << agent << " | " << model << " | " << fmt_double(mean) << " | " << selections
           << " | " << fallbacks << " |\n";
      }
    }
    md << "\nEscalation transitions: " << rep.escalation_transitions
       << "; human-confirmation events: " << rep.needs_human_events
       << "; unresolved rounds: " << rep.unresolved_rounds << "\n\n";
  }
  md << "Totals: " << result.counters.records << " records anchored, "
     << result.counters.fallbacks << " fallback selections, "
     << result.counters.joint_rounds << " joint-actuation rounds.\n";
  util::write_file(out_dir / "summary.md", md.str());
}

void write_perf_csv(const fs::path& path, const std::vector<sim::PerfPoint>& points) {
  std::ostringstream csv;
  csv << "requests,agents,throughput_rps,et_ms,d_ms,span_s,mean_gov_wait_ms\n";
  for (const auto& p : points)
    csv << p.requests << ',' << p.agents << ',' << fmt_double(p.throughput_rps) << ','
        << fmt_double(p.et_ms) << ',' << fmt_double(p.d_ms) << ',' << fmt_double(p.span_s) << ','
        << fmt_double(p.mean_gov_wait_ms) << '\n';
  util::write_file(path, csv.str());
}

std::vector<sim::PerfPoint> read_perf_csv(const fs::path& path) {
  auto rows = util::read_csv(path);
  util::require(rows.size() >= 2, "perf csv has no data rows: " + path.string());
  std::map<std::string, std::size_t> cols;
  for (std::size_t i = 0; i < rows[0].size(); ++i) cols[rows[0][i]] = i;
  for (const char* name : {"requests", "agents", "throughput_rps", "et_ms", "d_ms", "span_s"})
    util::require(cols.count(name) == 1, std::string("perf csv missing column: ") + name);

  std::vector<sim::PerfPoint> points;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    sim::PerfPoint p;
    p.requests = int(util::parse_int(row[cols["requests"]]));
    p.agents = int(util::parse_int(row[cols["agents"]]));
    p.throughput_rps = util::parse_double(row[cols["throughput_rps"]]);
    p.et_ms = util::parse_double(row[cols["et_ms"]]);
    p.d_ms = util::parse_double(row[cols["d_ms"]]);
    p.span_s = util::parse_double(row[cols["span_s"]]);
    if (cols.count("mean_gov_wait_ms"))
      p.mean_gov_wait_ms = util::parse_double(row[cols["mean_gov_wait_ms"]]);
    points.push_back(p);
  }
  return points;
}

std::vector<analytics::IterationMae> read_run_csv_mae(const fs::path& path) {
  auto rows = util::read_csv(path);
  util::require(rows.size() >= 2, "run csv has no data rows: " + path.string());
  std::map<std::string, std::size_t> cols;
  for (std::size_t i = 0; i < rows[0].size(); ++i) cols[rows[0][i]] = i;
  for (const char* name : {"iteration", "agent", "model", "mae"})
    util::require(cols.count(name) == 1, std::string("run csv missing column: ") + name);

  std::vector<analytics::IterationMae> iterations;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string& model = row[cols["model"]];
    if (model == "-") continue;  // rejected-packet rows carry no candidate
    auto iter = std::size_t(util::parse_int(row[cols["iteration"]]));
    if (iterations.size() <= iter) iterations.resize(iter + 1);
    iterations[iter][row[cols["agent"]]][model].push_back(util::parse_double(row[cols["mae"]]));
  }
  return iterations;
}

void write_projection(const fs::path& out_dir, const analytics::MeasuredPoint& measured,
                      const std::vector<analytics::Projection>& projections) {
  std::ostringstream csv;
  csv << "agents,saturated,utilization,throughput_rps,et_ms,d_ms\n";
  for (const auto& p : projections) {
    csv << p.agents << ',' << (p.saturated ? 1 : 0) << ',' << fmt_double(p.utilization) << ','
        << (p.saturated ? "" : fmt_double(p.throughput_rps)) << ','
        << (p.saturated ? "" : fmt_double(p.et_ms)) << ','
        << (p.saturated ? "saturated" : fmt_double(p.d_ms)) << '\n';
  }
  util::write_file(out_dir / "scalability.csv", csv.str());

  std::ostringstream md;
  md << "# Scalability projection\n\n";
  md << "Measured point: " << measured.agents << " agents, " << measured.requests
     << " requests, " << fmt_double(measured.throughput_rps) << " req/s, ET "
     << fmt_double(measured.et_ms) << " ms, governance time " << fmt_double(measured.d_ms)
     << " ms.\n\n";
  md << "| Agents | Throughput (req/s) | ET / req (ms) | D / req (ms) | Utilization |\n";
  md << "|---|---|---|---|---|\n";
  for (const auto& p : projections) {
    if (p.saturated)
      md << "| " << p.agents << " | saturated | saturated | saturated | "
         << fmt_double(p.utilization) << " |\n";
    else
      md << "| " << p.agents << " | " << fmt_double(p.throughput_rps) << " | "
         << fmt_double(p.et_ms) << " | " << fmt_double(p.d_ms) << " | "
         << fmt_double(p.utilization) << " |\n";
  }
  util::write_file(out_dir / "scalability.md", md.str());
}

}  // namespace trustgov::report
