#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/attack.hpp"
#include "ragaudit/corpus.hpp"
#include "ragaudit/exam.hpp"
#include "ragaudit/scoring.hpp"
#include "ragaudit/target.hpp"
#include "ragaudit/toml_lite.hpp"

namespace ragaudit {

struct RemoteSettings {
  std::string base_url;
  std::string model;
  double temperature = 0.0;
  int timeout_s = 60;
  int retries = 2;
  int max_in_flight = 4;
  std::string system_prompt;
  std::string embedding_model;  // used by retriever = "embedding"
};

struct CampaignConfig {
  std::uint64_t seed = 0;

  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::BeirJsonl;
  double member_fraction = 0.6;
  std::size_t eval_per_class = 100;
  std::size_t dev_per_class = 50;

  AttackKind attack = AttackKind::EMIA;
  std::size_t n_items = 28;
  std::size_t max_units = kDefaultMaxUnits;
  ItemSpec item_spec;
  bool batch_items = false;
  std::size_t n_masks = 10;
  std::size_t n_questions = 28;
  std::string extractor = "rules";  // "rules" | "llm"

  WeightVector weights;
  double tau = kDefaultTau;

  TargetConfig target;
  OracleGeneratorConfig oracle;
  RemoteSettings remote;     // target endpoint
  RemoteSettings generator;  // exam-generator endpoint (extractor = "llm")

  std::filesystem::path output_dir = "audit-out";
  std::size_t max_concurrent_targets = 4;
  bool emit_traces = false;
};

/// Defaults overlaid with the file's keys; unknown keys are errors and any
/// key naming an API key is refused (keys come from the environment only).
CampaignConfig load_config(const std::filesystem::path& path);
void apply_toml(CampaignConfig& cfg, const toml::Table& table);
/// Throws ConfigInvalid / SpecOutOfRange.
void validate(const CampaignConfig& cfg);

/// Everything that determines results (output location and parallelism excluded).
nlohmann::json effective_config_json(const CampaignConfig& cfg);
/// 16 hex digits over the canonical dump of effective_config_json.
std::string config_hash(const CampaignConfig& cfg);

}  // namespace ragaudit
