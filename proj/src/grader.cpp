#include "ragaudit/grader.hpp"

#include <cctype>
#include <map>
#include <regex>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::string_view to_string(FailureKind k) {
  switch (k) {
    case FailureKind::NoExtraction: return "no_extraction";
    case FailureKind::Mismatch: return "mismatch";
    case FailureKind::Refusal: return "refusal";
  }
  return "mismatch";
}

FailureKind failure_kind_from_string(std::string_view s) {
  if (s == "no_extraction") return FailureKind::NoExtraction;
  if (s == "mismatch") return FailureKind::Mismatch;
  if (s == "refusal") return FailureKind::Refusal;
  throw std::invalid_argument("unknown failure kind: " + std::string(s));
}

namespace {

bool blank_matches(const std::vector<std::string>& response_tokens, std::string_view gold,
                   const std::vector<std::string>& aliases, GradingRule rule) {
  auto try_one = [&](std::string_view cand) {
    auto needle = text::answer_tokens(normalize(cand, rule));
    return !needle.empty() && text::contains_token_run(response_tokens, needle);
  };
  if (try_one(gold)) return true;
  for (const auto& a : aliases)
    if (try_one(a)) return true;
  return false;
}

ItemGrade fail(ItemGrade g, FailureKind k) {
  g.correct = false;
  g.failure_kind = k;
  return g;
}

}  // namespace

ItemGrade grade_item(const ExamItem& item, const RawResponse& response) {
  if (response.item_id != item.item_id) throw ItemMismatch(item.item_id, response.item_id);
  ItemGrade g;
  g.item_id = item.item_id;
  if (response.refused || text::trim(response.text).empty()) return fail(g, FailureKind::Refusal);
  const bool refusal_phrase = looks_like_refusal(response.text);

  switch (item.qtype) {
    case QuestionType::FB: {
      auto toks = text::answer_tokens(normalize(response.text, item.normalization));
      bool all = !item.gold.blanks.empty();
      for (std::size_t i = 0; i < item.gold.blanks.size() && all; ++i) {
        static const std::vector<std::string> none;
        const auto& aliases = i < item.blank_aliases.size() ? item.blank_aliases[i] : none;
        all = blank_matches(toks, item.gold.blanks[i], aliases, item.normalization);
      }
      if (all) {
        g.correct = true;
        g.extracted = item.gold;
        return g;
      }
      if (refusal_phrase) return fail(g, FailureKind::Refusal);
      g.extracted = AnswerKey::of_blanks({normalize(response.text, item.normalization)});
      return fail(g, FailureKind::Mismatch);
    }
    case QuestionType::SC:
    case QuestionType::MC: {
      LetterSet allowed;
      for (const auto& o : item.options) allowed.insert(o.letter);
      LetterSet got = extract_letters(response.text, allowed);
      if (got.empty())
        return fail(g, refusal_phrase ? FailureKind::Refusal : FailureKind::NoExtraction);
      g.extracted = AnswerKey::of_letters(got);
      if (got == item.gold.letters) {
        g.correct = true;
        return g;
      }
      return fail(g, FailureKind::Mismatch);
    }
    case QuestionType::TF: {
      auto truth = extract_truth(response.text);
      if (!truth) return fail(g, refusal_phrase ? FailureKind::Refusal : FailureKind::NoExtraction);
      g.extracted = AnswerKey::of_bool(*truth);
      if (*truth == item.gold.truth) {
        g.correct = true;
        return g;
      }
      return fail(g, FailureKind::Mismatch);
    }
  }
  return fail(g, FailureKind::NoExtraction);
}

GradedExam grade_exam(const Exam& exam, std::span<const RawResponse> responses) {
  std::map<std::string, const RawResponse*> by_id;
  for (const auto& r : responses)
    if (!by_id.emplace(r.item_id, &r).second) throw DuplicateResponse(r.item_id);
  GradedExam out;
  out.doc_id = exam.doc_id;
  std::array<std::size_t, 4> correct{};
  for (const auto& item : exam.items) {
    auto it = by_id.find(item.item_id);
    if (it == by_id.end()) throw MissingResponse(item.item_id);
    auto g = grade_item(item, *it->second);
    ++out.counts[index_of(item.qtype)];
    if (g.correct) ++correct[index_of(item.qtype)];
    out.item_grades.push_back(std::move(g));
  }
  for (std::size_t i = 0; i < 4; ++i)
    out.acc[i] = out.counts[i] ? static_cast<double>(correct[i]) / static_cast<double>(out.counts[i]) : 0.0;
  return out;
}

std::string transcript_jsonl(const Exam& exam, std::span<const RawResponse> responses,
                             const GradedExam& graded) {
  std::map<std::string, const RawResponse*> by_id;
  for (const auto& r : responses) by_id.emplace(r.item_id, &r);
  std::map<std::string, const ItemGrade*> grades;
  for (const auto& g : graded.item_grades) grades.emplace(g.item_id, &g);
  std::string out;
  for (const auto& item : exam.items) {
    nlohmann::ordered_json j;
    j["item_id"] = item.item_id;
    j["qtype"] = to_string(item.qtype);
    j["prompt"] = render_item(item);
    auto r = by_id.find(item.item_id);
    j["response_text"] = r != by_id.end() ? r->second->text : "";
    j["latency_ms"] = r != by_id.end() ? r->second->latency_ms : 0;
    auto g = grades.find(item.item_id);
    if (g != grades.end()) {
      j["extracted"] = g->second->extracted ? nlohmann::json(*g->second->extracted) : nlohmann::json();
      j["correct"] = g->second->correct;
      j["failure_kind"] = g->second->failure_kind ? nlohmann::json(to_string(*g->second->failure_kind))
                                                  : nlohmann::json();
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<std::string> split_batched_response(std::string_view text, std::size_t n_items) {
  std::vector<std::string> out(n_items);
  static const std::regex head(R"(^\s*(?:Q|Question\s*)?(\d{1,3})\s*[.):]\s?(.*)$)",
                               std::regex::icase);
  std::string s(text);
  std::size_t current = 0;  // 1-based, 0 = none
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string::npos) nl = s.size();
    std::string line = s.substr(pos, nl - pos);
    std::smatch m;
    if (std::regex_match(line, m, head)) {
      std::size_t k = std::stoul(m[1].str());
      if (k >= 1 && k <= n_items) {
        current = k;
        out[k - 1] = m[2].str();
      } else {
        current = 0;
      }
    } else if (current && !text::trim(line).empty()) {
      out[current - 1] += "\n" + line;
    }
    pos = nl + 1;
  }
  return out;
}

void to_json(nlohmann::json& j, const ItemGrade& g) {
  j = nlohmann::json{{"item_id", g.item_id}, {"correct", g.correct}};
  j["extracted"] = g.extracted ? nlohmann::json(*g.extracted) : nlohmann::json();
  j["failure_kind"] = g.failure_kind ? nlohmann::json(to_string(*g.failure_kind)) : nlohmann::json();
}

void to_json(nlohmann::json& j, const GradedExam& g) {
  j = nlohmann::json::object();
  j["doc_id"] = g.doc_id;
  j["item_grades"] = g.item_grades;
  nlohmann::json acc = nlohmann::json::object();
  nlohmann::json counts = nlohmann::json::object();
  for (auto q : kAllQuestionTypes) {
    acc[std::string(to_string(q))] = g.acc[index_of(q)];
    counts[std::string(to_string(q))] = g.counts[index_of(q)];
  }
  j["acc"] = acc;
  j["counts"] = counts;
}

void from_json(const nlohmann::json& j, GradedExam& g) {
  g.doc_id = j.at("doc_id").get<std::string>();
  g.item_grades.clear();
  for (const auto& ig : j.value("item_grades", nlohmann::json::array())) {
    ItemGrade x;
    x.item_id = ig.at("item_id").get<std::string>();
    x.correct = ig.at("correct").get<bool>();
    if (ig.contains("extracted") && !ig["extracted"].is_null()) x.extracted = ig["extracted"].get<AnswerKey>();
    if (ig.contains("failure_kind") && !ig["failure_kind"].is_null())
      x.failure_kind = failure_kind_from_string(ig["failure_kind"].get<std::string>());
    g.item_grades.push_back(std::move(x));
  }
  for (auto q : kAllQuestionTypes) {
    std::string k(to_string(q));
    g.acc[index_of(q)] = j.at("acc").value(k, 0.0);
    g.counts[index_of(q)] = j.contains("counts") ? j["counts"].value(k, std::size_t{0}) : 0;
  }
}

}  // namespace ragaudit
