#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/attack.hpp"
#include "ragaudit/calibration.hpp"
#include "ragaudit/config.hpp"
#include "ragaudit/metrics.hpp"

namespace ragaudit {

/// Corpus, split, target sets and the knowledge-base index of one campaign.
struct CampaignWorld {
  std::vector<Document> docs;  // as ingested, labels untouched
  std::map<std::string, std::size_t> by_id;
  CorpusSplit split;
  EvalSet eval;
  EvalSet dev;  // disjoint from eval; empty when dev_per_class = 0 or the pool is exhausted
  std::shared_ptr<const Retriever> index;

  /// Copy without the label, which is what attacks get to see.
  Document blind(const std::string& doc_id) const;
};

CampaignWorld prepare_world(const CampaignConfig& cfg);
/// Same, over documents already in memory.
CampaignWorld prepare_world(const CampaignConfig& cfg, std::vector<Document> docs);

std::shared_ptr<const EvidenceExtractor> make_extractor(const CampaignConfig& cfg);
std::unique_ptr<Attack> make_attack(const CampaignConfig& cfg);
std::shared_ptr<Target> make_target(const CampaignConfig& cfg, const CampaignWorld& world,
                                    TraceSink* traces = nullptr);

/// Outcome of auditing one document.
struct TargetRun {
  AttackResult result;
  std::optional<Exam> exam;
  std::optional<GradedExam> graded;
  std::string transcript;  // JSONL
  std::string error;       // set when the result is incomplete
};

TargetRun audit_target(const Attack& attack, const Document& blind_doc, Label label, const Target& target,
                       const CampaignConfig& cfg);

struct CampaignOptions {
  std::optional<std::size_t> stop_after;  // stop once this many results are written (interruption tests)
  bool keep_runs = false;                 // retain exams and graded exams in the outcome
};

struct CampaignOutcome {
  std::vector<AttackResult> results;  // eval order
  MetricsReport metrics;
  std::size_t ledger_queries = 0;  // sum of per-target query counts in `results`
  std::size_t served_queries = 0;  // calls the target saw in this session
  bool interrupted = false;
  std::optional<double> guardrail_pass_rate;
  std::vector<TargetRun> runs;  // keep_runs only
};

/// Audits every eval target. With a non-empty cfg.output_dir the run writes
/// manifest.json, exams/, transcripts/, results.jsonl, metrics.json,
/// metrics.csv, histogram.csv, budget.json and (emit_traces) traces.jsonl.
CampaignOutcome run_campaign(const CampaignConfig& cfg, const CampaignOptions& opts = {});
CampaignOutcome run_campaign(const CampaignConfig& cfg, const CampaignWorld& world, const CampaignOptions& opts = {});
/// Audits an explicit target list (dev sets, sweeps); writes nothing.
CampaignOutcome run_targets(const CampaignConfig& cfg, const CampaignWorld& world, const EvalSet& targets,
                            const CampaignOptions& opts = {});

/// Continues the run recorded in output_dir. Throws ManifestCorrupt for an
/// unreadable manifest or results file and ConfigDrift when `cfg` (if
/// given) hashes differently from the manifest.
CampaignOutcome resume_campaign(const std::filesystem::path& output_dir,
                                const std::optional<CampaignConfig>& cfg = std::nullopt,
                                const CampaignOptions& opts = {});

/// Rebuilds a config from the effective-config JSON stored in a manifest.
CampaignConfig config_from_json(const nlohmann::json& j);

struct CalibrationReport {
  WeightCalibration weights;
  double tau = kDefaultTau;
  std::vector<ThresholdPoint> curve;
  std::size_t n_dev = 0;
  MetricsReport dev_metrics;  // dev set scored with the calibrated weights and tau
};

/// E-MIA over the dev set: per-type KL weights, then tau maximizing balanced
/// accuracy of the re-weighted dev scores. Never touches eval labels.
CalibrationReport calibrate_on_dev(const CampaignConfig& cfg, const CampaignWorld& world);

/// Independent trials varying the seed (and with it split, dev set and
/// generator noise); returns every trial plus the medoid.
std::vector<TrialOutcome> run_calibration_trials(const CampaignConfig& cfg, std::size_t n_trials);

void write_calibration(const std::filesystem::path& dir, const CalibrationReport& report,
                       const std::vector<TrialOutcome>& trials, const CalibratedParams& chosen);

/// Filesystem-safe name for a doc id.
std::string safe_file_stem(const std::string& doc_id);

}  // namespace ragaudit
