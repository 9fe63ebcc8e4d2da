#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/evidence.hpp"
#include "ragaudit/normalize.hpp"

namespace ragaudit {

enum class QuestionType { FB, SC, MC, TF };

inline constexpr QuestionType kAllQuestionTypes[] = {QuestionType::FB, QuestionType::SC,
                                                     QuestionType::MC, QuestionType::TF};

std::string_view to_string(QuestionType q);
QuestionType question_type_from_string(std::string_view s);
inline std::size_t index_of(QuestionType q) { return static_cast<std::size_t>(q); }

/// Marker substituted for each blank in fill-in prompts.
inline constexpr std::string_view kBlank = "____";

struct AnswerKey {
  enum class Kind { Letters, Blanks, Boolean };
  Kind kind = Kind::Boolean;
  LetterSet letters;
  std::vector<std::string> blanks;
  bool truth = false;

  static AnswerKey of_letters(LetterSet l) { return {Kind::Letters, std::move(l), {}, false}; }
  static AnswerKey of_blanks(std::vector<std::string> b) { return {Kind::Blanks, {}, std::move(b), false}; }
  static AnswerKey of_bool(bool t) { return {Kind::Boolean, {}, {}, t}; }

  bool operator==(const AnswerKey&) const = default;
};

std::string to_display(const AnswerKey& key);  // "A,C", "1988", "True"

struct Option {
  char letter = 'A';
  std::string text;
  bool operator==(const Option&) const = default;
};

struct ExamItem {
  std::string item_id;
  std::string doc_id;
  std::vector<std::string> evidence_ids;
  QuestionType qtype = QuestionType::FB;
  std::string prompt;
  std::vector<Option> options;
  AnswerKey gold;
  GradingRule normalization = GradingRule::ExactNormalized;
  std::optional<std::string> paraphrase_group;
  std::vector<std::vector<std::string>> blank_aliases;  // FB: accepted aliases per blank
  std::vector<std::string> anchors;  // evidence anchors the item was built from
  std::vector<std::string> decoys;   // FB: plausible wrong fills (never rendered)

  bool operator==(const ExamItem&) const = default;
};

struct ItemSpec {
  int sc_options = 4;  // C
  int sc_similar = 1;  // D
  int fb_blanks = 1;
  int mc_options = 4;  // n
  int mc_correct = 2;  // m
};

/// Throws SpecOutOfRange unless C in {4,5}, D in {1,2}, blanks in {1,2},
/// n in {4,5}, m = 2.
void check_item_spec(const ItemSpec& spec);

struct ExamSpec {
  ItemSpec item;
};

struct Exam {
  std::string doc_id;
  std::vector<ExamItem> items;
  std::uint64_t seed = 0;

  bool operator==(const Exam&) const = default;
};

/// Fixed category -> item type priority.
const std::vector<QuestionType>& preferred_qtypes(EvidenceCategory category);

/// Builds one item from `unit`. `context` holds the other units of the same
/// document; it supplies sibling-entity distractors and the second correct
/// statement of MC items. Throws SpecOutOfRange or ItemUnbuildable
/// (InsufficientDistractors).
ExamItem instantiate_item(const EvidenceUnit& unit, QuestionType qtype, const ItemSpec& spec,
                          std::uint64_t rng_seed, std::span<const EvidenceUnit> context = {});

/// At most floor(n/4) items may reuse evidence; at least ceil(3n/4) distinct
/// evidence ids are required.
std::size_t min_distinct_evidence(std::size_t n_items);

/// Balanced N-item exam (N/4 per type). Throws SpecOutOfRange when N is not a
/// positive multiple of 4 and InsufficientEvidence when the coverage floor
/// cannot be met.
Exam assemble_exam(std::span<const EvidenceUnit> units, std::size_t n_items, std::uint64_t seed,
                   const ExamSpec& spec = {});

struct ValidationIssue {
  enum class Kind { AmbiguousAnswer, ConfirmationProbe, NonDeterministicGold, Malformed };
  std::string item_id;
  Kind kind;
  std::string detail;
};

std::string_view to_string(ValidationIssue::Kind k);

std::vector<ValidationIssue> validate_exam(const Exam& exam);

inline constexpr std::string_view kProbeBlocklistVersion = "probe-v1";
const std::vector<std::string>& probe_blocklist();
/// Prompt contains a confirmation-probe phrase (case-insensitive).
bool contains_probe_phrase(std::string_view prompt);

/// The text sent to the target for one item: prompt, lettered options and the
/// reply instruction.
std::string render_item(const ExamItem& item);
/// Several items in one numbered prompt; replies are expected as "<n>. <answer>".
std::string render_batch(std::span<const ExamItem> items);
/// Human-readable exam listing with gold answers, for transcript logs.
std::string render_exam_text(const Exam& exam);

/// A reply that states the gold answer plainly; grades correct by construction.
std::string gold_response_text(const ExamItem& item);

void to_json(nlohmann::json& j, const AnswerKey& k);
void from_json(const nlohmann::json& j, AnswerKey& k);
void to_json(nlohmann::json& j, const ExamItem& item);
void from_json(const nlohmann::json& j, ExamItem& item);
void to_json(nlohmann::json& j, const Exam& exam);
void from_json(const nlohmann::json& j, Exam& exam);

}  // namespace ragaudit
