#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/corpus.hpp"
#include "ragaudit/grader.hpp"

namespace ragaudit {

struct WeightVector {
  double w_fb = 0.312;
  double w_sc = 0.214;
  double w_mc = 0.300;
  double w_tf = 0.174;

  static WeightVector published() { return {}; }
  static WeightVector uniform() { return {0.25, 0.25, 0.25, 0.25}; }

  double operator[](QuestionType q) const;
  std::array<double, 4> as_array() const { return {w_fb, w_sc, w_mc, w_tf}; }
  static WeightVector from_array(const std::array<double, 4>& a) { return {a[0], a[1], a[2], a[3]}; }
  /// Each weight in [0,1] and the sum within 1e-9 of 1.
  bool valid() const;

  bool operator==(const WeightVector&) const = default;
};

inline constexpr double kDefaultTau = 62.2;

/// 100 * sum_i w_i * Acc_i. Types with no items are dropped and the remaining
/// weights renormalized. Throws ConfigInvalid for invalid weights.
double aggregate(const GradedExam& graded, const WeightVector& weights);
double aggregate(const std::array<double, 4>& acc, const WeightVector& weights,
                 const std::array<bool, 4>& present = {true, true, true, true});

/// Member iff score >= threshold.
Label decide(double score, double threshold);

/// One decimal, as displayed in reports.
std::string display_score(double score);

struct AttackResult {
  std::string doc_id;
  std::string attack = "emia";
  double score = 0.0;
  Label decision = Label::NonMember;
  double threshold = kDefaultTau;
  std::optional<Label> label;
  bool complete = true;
  std::size_t queries = 0;  // target calls spent on this document

  bool operator==(const AttackResult&) const = default;
};

void to_json(nlohmann::json& j, const AttackResult& r);
void from_json(const nlohmann::json& j, AttackResult& r);
std::string to_jsonl_line(const AttackResult& r);
std::vector<AttackResult> read_results_jsonl(std::string_view text);

}  // namespace ragaudit
