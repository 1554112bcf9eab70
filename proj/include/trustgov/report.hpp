#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "trustgov/analytics.hpp"
#include "trustgov/sim.hpp"

namespace trustgov::report {

struct WilcoxonRow {
  std::string agent;
  std::string model;
  std::string transition;  // e.g. "0->1"
  analytics::WilcoxonResult result;
};

/// Paired per-request MAE tests between consecutive iterations, per agent
/// and model.
std::vector<WilcoxonRow> wilcoxon_rows(const std::vector<sim::IterationReport>& iterations);

void write_run_analysis(const std::filesystem::path& out_dir,
                        const std::vector<sim::IterationReport>& iterations,
                        const std::string& baseline_model);

void write_convergence_summary(const std::filesystem::path& out_dir,
                               const sim::ConvergenceResult& result);

void write_perf_csv(const std::filesystem::path& path, const std::vector<sim::PerfPoint>& points);
std::vector<sim::PerfPoint> read_perf_csv(const std::filesystem::path& path);

/// Rebuild the per-iteration MAE groupings from a run.csv, so the analysis
/// can be recomputed from the file alone.
std::vector<analytics::IterationMae> read_run_csv_mae(const std::filesystem::path& path);

void write_projection(const std::filesystem::path& out_dir,
                      const analytics::MeasuredPoint& measured,
                      const std::vector<analytics::Projection>& projections);

}  // namespace trustgov::report
