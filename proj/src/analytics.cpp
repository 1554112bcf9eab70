#include "trustgov/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "trustgov/util.hpp"

namespace trustgov::analytics {

using util::require;

namespace {

// Average ranks for |differences|, ties sharing the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& abs_diffs) {
  std::size_t n = abs_diffs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });

  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const PairedSample& sample, WilcoxonMethod method) {
  require(sample.before.size() == sample.after.size(),
          "wilcoxon: before/after lengths differ");
  require(!sample.before.empty(), "wilcoxon: empty sample");

  std::vector<double> diffs;
  for (std::size_t i = 0; i < sample.before.size(); ++i) {
    double d = sample.after[i] - sample.before[i];
    if (d != 0.0) diffs.push_back(d);
  }

  WilcoxonResult res;
  res.n_effective = static_cast<int>(diffs.size());
  if (diffs.empty()) {
    res.w = 0.0;
    res.p_value = 1.0;
    return res;
  }

  std::vector<double> abs_diffs(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) abs_diffs[i] = std::abs(diffs[i]);
  std::vector<double> ranks = average_ranks(abs_diffs);

  double w_plus = 0.0, w_minus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0.0) w_plus += ranks[i];
    else w_minus += ranks[i];
  }
  res.w = std::min(w_plus, w_minus);

  int n = res.n_effective;
  bool use_exact = method == WilcoxonMethod::exact ||
                   (method == WilcoxonMethod::automatic && n <= kWilcoxonExactLimit);
  if (use_exact) {
    require(n <= 24, "wilcoxon: exact enumeration limited to n <= 24");
    // Exact two-sided p: share of sign assignments whose min rank sum is at
    // most the observed one.
    std::uint64_t total = std::uint64_t(1) << n;
    double rank_total = 0.0;
    for (double r : ranks) rank_total += r;
    std::uint64_t hits = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double plus = 0.0;
      for (int i = 0; i < n; ++i)
        if (mask & (std::uint64_t(1) << i)) plus += ranks[std::size_t(i)];
      double min_sum = std::min(plus, rank_total - plus);
      if (min_sum <= res.w + 1e-12) ++hits;
    }
    res.p_value = static_cast<double>(hits) / static_cast<double>(total);
  } else {
    // Normal approximation with continuity correction plus an Edgeworth
    // kurtosis term. Moments come straight from the (tie-averaged) ranks:
    // W+ is a sum of independent r_i * Bernoulli(1/2), so the variance is
    // sum(r^2)/4 (the classical tie-corrected value) and the fourth cumulant
    // is -sum(r^4)/8.
    double dn = n;
    double mean = dn * (dn + 1.0) / 4.0;
    double var = 0.0;
    double kurt4 = 0.0;
    for (double r : ranks) {
      var += r * r / 4.0;
      kurt4 -= r * r * r * r / 8.0;
    }
    double gamma2 = kurt4 / (var * var);
    double z = (res.w - mean + 0.5) / std::sqrt(var);
    double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
    double lower_tail =
        standard_normal_cdf(z) - gamma2 / 24.0 * (z * z * z - 3.0 * z) * density;
    res.p_value = std::clamp(2.0 * lower_tail, 0.0, 1.0);
  }
  return res;
}

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

ReductionReport mae_reduction(const std::vector<IterationMae>& iterations,
                              const std::string& baseline_model) {
  require(iterations.size() >= 2, "mae_reduction: need at least two iterations");
  ReductionReport report;
  report.baseline_model = baseline_model;

  const IterationMae& first = iterations.front();
  const IterationMae& final_it = iterations.back();

  std::set<std::string> models;
  for (const auto& [agent, by_model] : first)
    for (const auto& [model, vals] : by_model) models.insert(model);

  auto make_row = [](const std::string& agent, const std::string& model, double m0, double mf) {
    ReductionRow row;
    row.agent = agent;
    row.model = model;
    row.mean_first = m0;
    row.mean_final = mf;
    if (m0 != 0.0) row.reduction = (m0 - mf) / m0;
    return row;
  };

  for (const auto& [agent, by_model] : first) {
    for (const auto& [model, vals] : by_model) {
      double m0 = mean_of(vals);
      double mf = mean_of(final_it.at(agent).at(model));
      report.per_agent.push_back(make_row(agent, model, m0, mf));
    }
  }

  for (const auto& model : models) {
    std::vector<double> all_first, all_final;
    for (const auto& [agent, by_model] : first) {
      auto it0 = by_model.find(model);
      if (it0 == by_model.end()) continue;  // agents may run different model sets
      all_first.insert(all_first.end(), it0->second.begin(), it0->second.end());
      const auto& vf = final_it.at(agent).at(model);
      all_final.insert(all_final.end(), vf.begin(), vf.end());
    }
    report.pooled.push_back(make_row("", model, mean_of(all_first), mean_of(all_final)));
  }

  // Baseline and oracle pool every request of every iteration.
  for (const auto& [agent, by_model] : first) {
    std::vector<double> baseline_all;
    std::vector<double> oracle_all;
    for (const auto& iter : iterations) {
      const auto& agent_models = iter.at(agent);
      auto bit = agent_models.find(baseline_model);
      require(bit != agent_models.end(), "mae_reduction: baseline model missing: " + baseline_model);
      baseline_all.insert(baseline_all.end(), bit->second.begin(), bit->second.end());

      std::size_t requests = bit->second.size();
      for (std::size_t k = 0; k < requests; ++k) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [model, vals] : agent_models) best = std::min(best, vals.at(k));
        oracle_all.push_back(best);
      }
    }
    report.baseline_mean[agent] = mean_of(baseline_all);
    report.oracle_mean[agent] = mean_of(oracle_all);
  }
  return report;
}

double erlang_c(double arrival_rate, double service_rate, int servers) {
  require(arrival_rate > 0.0 && service_rate > 0.0, "erlang_c: rates must be positive");
  require(servers >= 1, "erlang_c: servers must be >= 1");
  double a = arrival_rate / service_rate;  // offered load
  double rho = a / servers;
  if (rho >= 1.0) return 1.0;

  // Iterative Erlang-B, then convert to Erlang-C.
  double b = 1.0;
  for (int k = 1; k <= servers; ++k) b = a * b / (k + a * b);
  return b / (1.0 - rho * (1.0 - b));
}

double erlang_c_wait_s(double arrival_rate, double service_rate, int servers) {
  double a = arrival_rate / service_rate;
  if (a / servers >= 1.0) return std::numeric_limits<double>::infinity();
  double pw = erlang_c(arrival_rate, service_rate, servers);
  return pw / (servers * service_rate - arrival_rate);
}

std::vector<Projection> mmc_project(const MeasuredPoint& measured, const std::vector<int>& targets,
                                    int servers, double contention) {
  require(measured.agents >= 1, "mmc_project: measured agent count must be >= 1");
  require(measured.throughput_rps > 0.0, "mmc_project: measured throughput must be positive");
  require(measured.d_ms > 0.0, "mmc_project: measured governance time must be positive");
  require(contention > 0.0, "mmc_project: contention factor must be positive");

  double service_s = measured.d_ms / 1000.0;
  double mu = 1.0 / service_s;
  double per_agent_rate = measured.throughput_rps / measured.agents;

  auto modeled_delay_s = [&](int agents) -> double {
    double lambda = per_agent_rate * agents;
    if (lambda / (servers * mu) >= 1.0) return std::numeric_limits<double>::infinity();
    return service_s + erlang_c_wait_s(lambda, mu, servers);
  };

  double anchor_delay_s = modeled_delay_s(measured.agents);
  require(std::isfinite(anchor_delay_s), "mmc_project: measured point is not stable");

  std::vector<Projection> out;
  for (int agents : targets) {
    require(agents >= 1, "mmc_project: target agent count must be >= 1");
    Projection p;
    p.agents = agents;
    double lambda = per_agent_rate * agents;
    p.utilization = lambda / (servers * mu);
    double delay_s = modeled_delay_s(agents);
    if (!std::isfinite(delay_s)) {
      p.saturated = true;
      p.throughput_rps = 0.0;
      p.et_ms = 0.0;
      p.d_ms = std::numeric_limits<double>::infinity();
      out.push_back(p);
      continue;
    }
    p.d_ms = delay_s * 1000.0;
    p.throughput_rps = measured.throughput_rps * anchor_delay_s / delay_s;
    double steps = static_cast<double>(agents - measured.agents) / measured.agents;
    p.et_ms = measured.et_ms * std::pow(contention, steps);
    out.push_back(p);
  }
  return out;
}

}  // namespace trustgov::analytics
