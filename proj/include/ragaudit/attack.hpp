#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ragaudit/evidence.hpp"
#include "ragaudit/exam.hpp"
#include "ragaudit/grader.hpp"
#include "ragaudit/scoring.hpp"
#include "ragaudit/target.hpp"

namespace ragaudit {

enum class AttackKind { EMIA, S2MIA, MBA, IA };
std::string_view to_string(AttackKind k);  // "emia", "s2mia", "mba", "ia"
AttackKind attack_kind_from_string(std::string_view s);

/// Queries for one target document plus whatever the attack needs to score
/// the replies. Never carries membership labels.
struct AttackPlan {
  std::string doc_id;
  std::vector<Query> queries;
  std::optional<Exam> exam;            // E-MIA
  bool batched = false;                // E-MIA: all items in one query
  std::string reference;               // S2MIA: withheld second half
  std::vector<std::string> expected;   // MBA: hidden tokens
  std::vector<ExamItem> yes_no_items;  // IA: statements graded through the TF path
};

struct AttackOutcome {
  double score = 0.0;  // [0,100]
  std::optional<GradedExam> graded;
  std::vector<RawResponse> item_responses;  // E-MIA replies keyed by item id
};

class Attack {
 public:
  virtual ~Attack() = default;
  virtual AttackKind kind() const = 0;
  std::string name() const { return std::string(to_string(kind())); }
  virtual AttackPlan prepare(const Document& doc, std::uint64_t seed) const = 0;
  /// `responses[i]` answers `plan.queries[i]`.
  virtual AttackOutcome score(const AttackPlan& plan, std::span<const RawResponse> responses) const = 0;
};

struct EmiaParams {
  std::size_t n_items = 28;
  std::size_t max_units = kDefaultMaxUnits;
  ExamSpec spec;
  WeightVector weights;
  bool batch_items = false;
};

class EmiaAttack final : public Attack {
 public:
  EmiaAttack(std::shared_ptr<const EvidenceExtractor> extractor, EmiaParams params);
  AttackKind kind() const override { return AttackKind::EMIA; }
  AttackPlan prepare(const Document& doc, std::uint64_t seed) const override;
  AttackOutcome score(const AttackPlan& plan, std::span<const RawResponse> responses) const override;
  /// Queries for an already assembled exam (administration order shuffled per seed).
  AttackPlan plan_for(const Exam& exam, std::uint64_t seed) const;

 private:
  std::shared_ptr<const EvidenceExtractor> extractor_;
  EmiaParams p_;
};

/// Continuation attack: first half as the prompt, 100 x BLEU-4 of the reply
/// against the second half. Needs >= 40 tokens.
class S2miaAttack final : public Attack {
 public:
  AttackKind kind() const override { return AttackKind::S2MIA; }
  AttackPlan prepare(const Document& doc, std::uint64_t seed) const override;
  AttackOutcome score(const AttackPlan& plan, std::span<const RawResponse> responses) const override;
};

/// Masked-token attack: n_masks content words replaced by [MASK_i]; score is
/// 100 x exact fills / n_masks. Needs n_masks <= token_count / 10.
class MbaAttack final : public Attack {
 public:
  explicit MbaAttack(std::size_t n_masks = 10) : n_masks_(n_masks) {}
  AttackKind kind() const override { return AttackKind::MBA; }
  AttackPlan prepare(const Document& doc, std::uint64_t seed) const override;
  AttackOutcome score(const AttackPlan& plan, std::span<const RawResponse> responses) const override;

 private:
  std::size_t n_masks_;
};

/// Yes/no interrogation over true statements drawn from evidence units;
/// score is 100 x share answered "yes".
class IaAttack final : public Attack {
 public:
  IaAttack(std::shared_ptr<const EvidenceExtractor> extractor, std::size_t n_questions = 28)
      : extractor_(std::move(extractor)), n_questions_(n_questions) {}
  AttackKind kind() const override { return AttackKind::IA; }
  AttackPlan prepare(const Document& doc, std::uint64_t seed) const override;
  AttackOutcome score(const AttackPlan& plan, std::span<const RawResponse> responses) const override;

 private:
  std::shared_ptr<const EvidenceExtractor> extractor_;
  std::size_t n_questions_;
};

/// prepare -> query the target once per planned query -> score.
AttackOutcome run_attack(const Attack& attack, const Document& doc, const Target& target, std::uint64_t seed);

double s2mia_attack(const Document& doc, const Target& target);
double mba_attack(const Document& doc, const Target& target, std::size_t n_masks, std::uint64_t seed);
double ia_attack(const Document& doc, const Target& target, std::size_t n_questions, std::uint64_t seed);

}  // namespace ragaudit
