#include "ragaudit/scoring.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

double WeightVector::operator[](QuestionType q) const { return as_array()[index_of(q)]; }

bool WeightVector::valid() const {
  double sum = 0;
  for (double w : as_array()) {
    if (!(w >= 0.0 && w <= 1.0)) return false;
    sum += w;
  }
  return std::fabs(sum - 1.0) <= 1e-9;
}

double aggregate(const std::array<double, 4>& acc, const WeightVector& weights,
                 const std::array<bool, 4>& present) {
  if (!weights.valid()) throw ConfigInvalid("weights must lie in [0,1] and sum to 1");
  auto w = weights.as_array();
  double mass = 0;
  for (std::size_t i = 0; i < 4; ++i)
    if (present[i]) mass += w[i];
  if (mass <= 0) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < 4; ++i)
    if (present[i]) s += w[i] * acc[i];
  if (mass < 1.0) s /= mass;
  double score = 100.0 * s;
  if (score < 0) score = 0;
  if (score > 100) score = 100;
  return score;
}

double aggregate(const GradedExam& graded, const WeightVector& weights) {
  std::array<bool, 4> present{};
  for (std::size_t i = 0; i < 4; ++i) present[i] = graded.counts[i] > 0;
  return aggregate(graded.acc, weights, present);
}

Label decide(double score, double threshold) {
  return score >= threshold ? Label::Member : Label::NonMember;
}

std::string display_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", score);
  return buf;
}

void to_json(nlohmann::json& j, const AttackResult& r) {
  j = nlohmann::json{{"doc_id", r.doc_id},       {"attack", r.attack},     {"score", r.score},
                     {"decision", to_string(r.decision)}, {"threshold", r.threshold},
                     {"complete", r.complete},   {"queries", r.queries}};
  j["label"] = r.label ? nlohmann::json(to_string(*r.label)) : nlohmann::json();
}

void from_json(const nlohmann::json& j, AttackResult& r) {
  r.doc_id = j.at("doc_id").get<std::string>();
  r.attack = j.value("attack", "emia");
  r.score = j.at("score").get<double>();
  r.decision = label_from_string(j.at("decision").get<std::string>());
  r.threshold = j.value("threshold", kDefaultTau);
  r.complete = j.value("complete", true);
  r.queries = j.value("queries", std::size_t{0});
  r.label.reset();
  if (j.contains("label") && !j["label"].is_null()) r.label = label_from_string(j["label"].get<std::string>());
}

std::string to_jsonl_line(const AttackResult& r) {
  nlohmann::ordered_json j;
  j["doc_id"] = r.doc_id;
  j["attack"] = r.attack;
  j["score"] = r.score;
  j["decision"] = to_string(r.decision);
  j["threshold"] = r.threshold;
  j["label"] = r.label ? nlohmann::ordered_json(to_string(*r.label)) : nlohmann::ordered_json();
  j["complete"] = r.complete;
  j["queries"] = r.queries;
  return j.dump() + "\n";
}

std::vector<AttackResult> read_results_jsonl(std::string_view text) {
  std::vector<AttackResult> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text::trim(text.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<AttackResult>());
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(line_no, e.what());
    }
  }
  return out;
}

}  // namespace ragaudit
