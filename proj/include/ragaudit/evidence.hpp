#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/corpus.hpp"
#include "ragaudit/normalize.hpp"

namespace ragaudit {

enum class EvidenceCategory {
  PreciseDetail,          // PD: numbers, dates, thresholds
  ProperNounTerm,         // PNT: entities, acronyms, terminology
  DefinitionalStatement,  // DS: "X is defined as Y"
  MetadataCue,            // MDC: sections, tables, versions, identifiers
  ConstraintRelation,     // CR: condition/consequence, dependency links
};

inline constexpr std::size_t kEvidenceCategoryCount = 5;
inline constexpr EvidenceCategory kAllCategories[] = {
    EvidenceCategory::PreciseDetail, EvidenceCategory::ProperNounTerm,
    EvidenceCategory::DefinitionalStatement, EvidenceCategory::MetadataCue,
    EvidenceCategory::ConstraintRelation};

std::string_view to_string(EvidenceCategory c);  // "PD", "PNT", ...
EvidenceCategory category_from_string(std::string_view s);

/// Longest anchor, in whitespace tokens, an evidence unit may quote.
inline constexpr std::size_t kMaxAnchorTokens = 12;
inline constexpr std::size_t kDefaultMaxUnits = 40;

struct EvidenceUnit {
  std::string unit_id;
  std::string doc_id;
  EvidenceCategory category = EvidenceCategory::PreciseDetail;
  std::string anchor;            // verbatim document span, <= kMaxAnchorTokens tokens
  std::string canonical_answer;  // occurs inside `anchor`
  std::vector<std::string> alias_set;
  GradingRule grading_rule = GradingRule::ExactNormalized;
  std::size_t char_start = 0;  // anchor span [char_start, char_end) in bytes of Document::text
  std::size_t char_end = 0;
  // Constraint relations only: "<premise> <connective> <canonical_answer>".
  std::string premise;
  std::string connective;

  bool operator==(const EvidenceUnit&) const = default;
};

/// Whether `rule` may grade evidence of category `c`. Numeric and date
/// canonicalization are reserved for precise details; option-set grading is
/// allowed for every category except precise details (which always have a
/// free-text canonical form).
bool rule_permitted(EvidenceCategory c, GradingRule rule);

/// Anchoring, non-empty answer, anchor length and rule/category consistency.
bool validate_unit(const EvidenceUnit& unit, const Document& doc);

class EvidenceExtractor {
 public:
  virtual ~EvidenceExtractor() = default;
  virtual std::string name() const = 0;
  /// Candidate units in document order; may return more than `max_units`.
  virtual std::vector<EvidenceUnit> extract(const Document& doc, std::size_t max_units) const = 0;
};

/// Deterministic heuristics: numeric/date tokens -> PD; acronyms and repeated
/// capitalized n-grams -> PNT; "X is defined as Y" -> DS; section/table/
/// version/identifier patterns -> MDC; if/then, "requires", "leads to" -> CR.
class RuleBasedExtractor final : public EvidenceExtractor {
 public:
  std::string name() const override { return "rules"; }
  std::vector<EvidenceUnit> extract(const Document& doc, std::size_t max_units) const override;
};

/// Runs the extractor, drops units failing validate_unit, and keeps at most
/// `max_units`, spreading picks round-robin across categories when it has to
/// truncate. Throws NoEvidenceFound when nothing valid remains.
std::vector<EvidenceUnit> extract_evidence(const Document& doc, const EvidenceExtractor& extractor,
                                           std::size_t max_units = kDefaultMaxUnits);

/// Alias spellings the grader treats as equal to `answer`.
std::vector<std::string> make_aliases(std::string_view answer, GradingRule rule);

void to_json(nlohmann::json& j, const EvidenceUnit& u);
void from_json(const nlohmann::json& j, EvidenceUnit& u);

}  // namespace ragaudit
