#include "ragaudit/evidence_llm.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "ragaudit/text.hpp"

namespace ragaudit {

std::string LlmExtractor::build_prompt(const Document& doc, std::size_t max_units) {
  std::string p =
      "Extract up to " + std::to_string(max_units) +
      " hard evidence facts from the document below. Each fact must quote a short verbatim span of "
      "the document (at most 12 words) as \"anchor\" and name the exact answer inside it as \"answer\".\n"
      "Categories: PD (numbers, dates, measurements), PNT (names, acronyms, technical terms), DS "
      "(definitions), MDC (section, table, version or identifier references), CR (conditions, "
      "dependencies, causal links).\n"
      "Rules: NumericCanonical or DateCanonical for PD numbers and dates, otherwise ExactNormalized.\n"
      "Reply with a JSON array only, e.g. [{\"category\": \"PD\", \"anchor\": \"...\", \"answer\": "
      "\"...\", \"rule\": \"NumericCanonical\"}].\n\n";
  if (!doc.title.empty()) p += "Title: " + doc.title + "\n";
  p += doc.text;
  return p;
}

std::vector<EvidenceUnit> LlmExtractor::parse_reply(std::string_view reply, const Document& doc) {
  std::vector<EvidenceUnit> out;
  auto b = reply.find('[');
  auto e = reply.rfind(']');
  if (b == std::string_view::npos || e == std::string_view::npos || e < b) return out;
  nlohmann::json arr = nlohmann::json::parse(reply.substr(b, e - b + 1), nullptr, false);
  if (!arr.is_array()) return out;
  for (const auto& x : arr) {
    if (!x.is_object()) continue;
    try {
      EvidenceUnit u;
      u.doc_id = doc.doc_id;
      u.category = category_from_string(x.at("category").get<std::string>());
      u.anchor = std::string(text::trim(x.at("anchor").get<std::string>()));
      u.canonical_answer = std::string(text::trim(x.at("answer").get<std::string>()));
      u.grading_rule = grading_rule_from_string(x.value("rule", std::string("ExactNormalized")));
      auto pos = doc.text.find(u.anchor);
      if (u.anchor.empty() || pos == std::string::npos) continue;
      if (u.anchor.find(u.canonical_answer) == std::string::npos) continue;
      u.char_start = pos;
      u.char_end = pos + u.anchor.size();
      u.alias_set = make_aliases(u.canonical_answer, u.grading_rule);
      out.push_back(std::move(u));
    } catch (const std::exception&) {
      continue;  // malformed record from the model
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EvidenceUnit& a, const EvidenceUnit& b) { return a.char_start < b.char_start; });
  return out;
}

std::vector<EvidenceUnit> LlmExtractor::extract(const Document& doc, std::size_t max_units) const {
  std::vector<ChatMessage> msgs = {
      {"system", "You extract verifiable facts from documents and answer in strict JSON."},
      {"user", build_prompt(doc, max_units)}};
  return parse_reply(client_->complete(msgs), doc);
}

}  // namespace ragaudit
