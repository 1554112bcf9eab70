#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "trustgov/ledger.hpp"
#include "trustgov/pipeline.hpp"
#include "trustgov/wire.hpp"

namespace trustgov::agent {

/// Configurable stand-in for a candidate reasoner: emits the agent's true
/// metrics shifted by a fixed bias, bounded noise, and the adjustment
/// accumulated from governance feedback. With zero noise it is deterministic.
struct StubReasoner {
  std::string model_id;
  double bias_r = 0.0;
  double bias_t = 0.0;
  double noise_amplitude = 0.0;
  double adjust_r = 0.0;  // accumulated feedback, starts at zero
  double adjust_t = 0.0;
};

/// Emit a (r, t) report for the local metric vector; values clipped to [0,1].
/// rng may be null when noise_amplitude is zero.
policy::CandidateReport emit(const StubReasoner& reasoner, const metrics::AgentRiskTrust& local,
                             std::mt19937_64* rng);

/// Absorb a governance-issued (dR, dT): the accumulated adjustment moves by
/// factor * delta per axis, so the next emission lands halfway to the
/// reference at the default factor.
void apply_feedback(StubReasoner& reasoner, double delta_r, double delta_t, double factor = 0.5);

/// One domain agent: computes local metrics through the shared pipeline,
/// queries its stub reasoners, anchors the round on its own chain, and
/// forwards a signed packet. Feedback received from governance is staged and
/// absorbed on request (the harness absorbs at iteration boundaries).
class AgentRuntime {
 public:
  AgentRuntime(std::string agent_id, pipeline::DomainProfile profile,
               std::vector<StubReasoner> reasoners, std::shared_ptr<const ledger::Signer> signer,
               ledger::Chain* chain, std::string policy_digest = "");

  wire::GovernancePacket observe_and_report(const pipeline::Observation& obs,
                                            std::mt19937_64* rng);

  /// Stash the round outcome for the next round's trust inputs and stage the
  /// feedback deltas issued to this agent's reasoners.
  void receive_record(const wire::DecisionRecord& record);

  /// Apply the mean staged delta per reasoner, then clear the stage.
  void absorb_staged_feedback(double factor = 0.5);

  const std::string& id() const { return id_; }
  const pipeline::DomainProfile& profile() const { return profile_; }
  const std::vector<StubReasoner>& reasoners() const { return reasoners_; }
  std::vector<StubReasoner>& reasoners() { return reasoners_; }
  const std::optional<metrics::AgentRiskTrust>& last_local() const { return last_local_; }

 private:
  std::string id_;
  pipeline::DomainProfile profile_;
  std::vector<StubReasoner> reasoners_;
  std::shared_ptr<const ledger::Signer> signer_;
  ledger::Chain* chain_ = nullptr;
  std::string policy_digest_;

  pipeline::MetricState state_;
  double last_timestamp_ = 0.0;
  bool has_reported_ = false;
  bool prev_selected_ = false;
  std::vector<policy::CandidateReport> prev_reports_;
  std::map<std::string, double> prev_mae_;
  std::optional<std::string> prev_selected_model_;
  double eps_r_ = 0.07;
  double eps_t_ = 0.05;

  std::map<std::string, std::vector<std::pair<double, double>>> staged_feedback_;
  std::optional<metrics::AgentRiskTrust> last_local_;

 public:
  /// Admission tolerances used for the reputation agreement test; kept in
  /// sync with the governance policy by the harness.
  void set_reputation_tolerances(double eps_r, double eps_t);
};

/// Load a per-domain observation CSV (header required, one observation per
/// row). Columns are domain specific; any column named ctx_<label> becomes a
/// context modifier with that label.
std::vector<pipeline::Observation> observations_from_csv(const std::filesystem::path& path,
                                                         const std::string& domain);

/// Inverse of observations_from_csv for the shipped schemas.
void observations_to_csv(const std::vector<pipeline::Observation>& observations,
                         const std::filesystem::path& path);

}  // namespace trustgov::agent
