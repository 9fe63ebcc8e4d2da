#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/exam.hpp"

namespace ragaudit {

struct RawResponse {
  std::string item_id;
  std::string text;
  std::int64_t latency_ms = 0;
  bool refused = false;  // transport-level refusal (guardrail block, empty completion)

  bool operator==(const RawResponse&) const = default;
};

enum class FailureKind { NoExtraction, Mismatch, Refusal };
std::string_view to_string(FailureKind k);
FailureKind failure_kind_from_string(std::string_view s);

struct ItemGrade {
  std::string item_id;
  bool correct = false;
  std::optional<AnswerKey> extracted;
  std::optional<FailureKind> failure_kind;

  bool operator==(const ItemGrade&) const = default;
};

/// Pure function of (item, response.text, response.refused). Throws
/// ItemMismatch when the ids differ.
///
/// FB: after normalization a gold blank (or alias) must occur as a contiguous
/// token run; every blank must match. SC/MC: extracted letter set must equal
/// the gold set. TF: extract_truth compared to gold. A refusal phrase only
/// counts as Refusal when nothing gradable was extracted.
ItemGrade grade_item(const ExamItem& item, const RawResponse& response);

struct GradedExam {
  std::string doc_id;
  std::vector<ItemGrade> item_grades;  // exam item order
  std::array<double, 4> acc{};         // indexed by QuestionType
  std::array<std::size_t, 4> counts{}; // items per type; 0 means absent

  double accuracy(QuestionType q) const { return acc[index_of(q)]; }
  bool has(QuestionType q) const { return counts[index_of(q)] > 0; }
};

/// Grades every item; responses may arrive in any order. Throws
/// MissingResponse / DuplicateResponse.
GradedExam grade_exam(const Exam& exam, std::span<const RawResponse> responses);

/// Transcript JSONL: {item_id, prompt, response_text, extracted, correct,
/// failure_kind, latency_ms}, one line per item in exam order.
std::string transcript_jsonl(const Exam& exam, std::span<const RawResponse> responses,
                             const GradedExam& graded);

/// Splits a reply to render_batch into per-question answers ("1. B", "2) True").
/// Questions without a numbered line get an empty string.
std::vector<std::string> split_batched_response(std::string_view text, std::size_t n_items);

void to_json(nlohmann::json& j, const ItemGrade& g);
void to_json(nlohmann::json& j, const GradedExam& g);
void from_json(const nlohmann::json& j, GradedExam& g);

}  // namespace ragaudit
