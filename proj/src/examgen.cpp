#include "ragaudit/exam.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/grader.hpp"
#include "ragaudit/rng.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::string_view to_string(QuestionType q) {
  switch (q) {
    case QuestionType::FB: return "FB";
    case QuestionType::SC: return "SC";
    case QuestionType::MC: return "MC";
    case QuestionType::TF: return "TF";
  }
  return "FB";
}

QuestionType question_type_from_string(std::string_view s) {
  for (auto q : kAllQuestionTypes)
    if (to_string(q) == s) return q;
  throw std::invalid_argument("unknown question type: " + std::string(s));
}

std::string_view to_string(ValidationIssue::Kind k) {
  switch (k) {
    case ValidationIssue::Kind::AmbiguousAnswer: return "AmbiguousAnswer";
    case ValidationIssue::Kind::ConfirmationProbe: return "ConfirmationProbe";
    case ValidationIssue::Kind::NonDeterministicGold: return "NonDeterministicGold";
    case ValidationIssue::Kind::Malformed: return "Malformed";
  }
  return "Malformed";
}

std::string to_display(const AnswerKey& key) {
  switch (key.kind) {
    case AnswerKey::Kind::Letters: {
      std::string s;
      for (char c : key.letters) {
        if (!s.empty()) s += ',';
        s += c;
      }
      return s;
    }
    case AnswerKey::Kind::Blanks: return text::join(key.blanks, "; ");
    case AnswerKey::Kind::Boolean: return key.truth ? "True" : "False";
  }
  return {};
}

void check_item_spec(const ItemSpec& spec) {
  if (spec.sc_options < 4 || spec.sc_options > 5)
    throw SpecOutOfRange("SC option count C must be 4 or 5, got " + std::to_string(spec.sc_options));
  if (spec.sc_similar < 1 || spec.sc_similar > 2)
    throw SpecOutOfRange("SC similar distractors D must be 1 or 2, got " + std::to_string(spec.sc_similar));
  if (spec.fb_blanks < 1 || spec.fb_blanks > 2)
    throw SpecOutOfRange("FB blanks must be 1 or 2, got " + std::to_string(spec.fb_blanks));
  if (spec.mc_options < 4 || spec.mc_options > 5)
    throw SpecOutOfRange("MC option count n must be 4 or 5, got " + std::to_string(spec.mc_options));
  if (spec.mc_correct != 2)
    throw SpecOutOfRange("MC correct count m must be 2, got " + std::to_string(spec.mc_correct));
}

const std::vector<QuestionType>& preferred_qtypes(EvidenceCategory category) {
  using Q = QuestionType;
  static const std::vector<Q> pd = {Q::FB, Q::MC, Q::SC, Q::TF};
  static const std::vector<Q> ds = {Q::FB, Q::SC, Q::TF, Q::MC};
  static const std::vector<Q> pnt = {Q::TF, Q::SC, Q::MC, Q::FB};
  static const std::vector<Q> cr = {Q::TF, Q::FB, Q::SC, Q::MC};
  static const std::vector<Q> mdc = {Q::SC, Q::FB, Q::MC, Q::TF};
  switch (category) {
    case EvidenceCategory::PreciseDetail: return pd;
    case EvidenceCategory::DefinitionalStatement: return ds;
    case EvidenceCategory::ProperNounTerm: return pnt;
    case EvidenceCategory::ConstraintRelation: return cr;
    case EvidenceCategory::MetadataCue: return mdc;
  }
  return pd;
}

const std::vector<std::string>& probe_blocklist() {
  static const std::vector<std::string> list = {
      "knowledge base", "corpus",        "retrieved",       "ingested",       "do you have access",
      "in your database", "your documents", "training data", "have you seen", "this document",
      "your index",     "stored in",     "were you given",  "in your context", "your sources"};
  return list;
}

bool contains_probe_phrase(std::string_view prompt) {
  std::string low = text::casefold(prompt);
  for (const auto& p : probe_blocklist())
    if (low.find(p) != std::string::npos) return true;
  return false;
}

std::size_t min_distinct_evidence(std::size_t n_items) { return (3 * n_items + 3) / 4; }

// ---------------------------------------------------------------------------
// Distractors

namespace {

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string format_number(double v, int decimals, bool commas) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (!commas) return s;
  std::size_t dot = s.find('.');
  std::string ip = s.substr(0, dot == std::string::npos ? s.size() : dot);
  std::string fp = dot == std::string::npos ? "" : s.substr(dot);
  std::string grouped;
  for (std::size_t i = 0; i < ip.size(); ++i) {
    if (i > 0 && (ip.size() - i) % 3 == 0) grouped += ',';
    grouped += ip[i];
  }
  return grouped + fp;
}

std::vector<std::string> numeric_neighbors(const std::string& answer) {
  static const std::regex re(R"(^(\d{1,3}(?:,\d{3})+|\d+)(\.\d+)?(.*)$)");
  std::smatch m;
  if (!std::regex_match(answer, m, re)) return {};
  std::string ip = m[1].str();
  bool commas = ip.find(',') != std::string::npos;
  ip.erase(std::remove(ip.begin(), ip.end(), ','), ip.end());
  int decimals = m[2].matched ? static_cast<int>(m[2].length()) - 1 : 0;
  double v = std::stod(ip + (m[2].matched ? m[2].str() : ""));
  std::string suffix = m[3].str();
  if (v <= 0) return {};
  double msu = std::pow(10.0, std::floor(std::log10(v)));
  std::vector<std::string> out;
  for (double c : {v * 0.5, v * 2.0, v + msu, v - msu}) {
    if (c <= 0) continue;
    double scaled = std::round(c * std::pow(10.0, decimals)) / std::pow(10.0, decimals);
    if (scaled <= 0) continue;
    out.push_back(format_number(scaled, decimals, commas || scaled >= 10000) + suffix);
  }
  return out;
}

const std::array<std::string, 12>& month_names() {
  static const std::array<std::string, 12> m = {"January", "February", "March",     "April",
                                                "May",     "June",     "July",      "August",
                                                "September", "October", "November", "December"};
  return m;
}

int month_index(const std::string& name) {
  for (int i = 0; i < 12; ++i)
    if (month_names()[i] == name) return i + 1;
  return 0;
}

std::vector<std::string> date_neighbors(const std::string& answer) {
  std::vector<std::string> out;
  std::smatch m;
  static const std::regex year(R"(^(\d{4})$)");
  static const std::regex mdy(R"(^([A-Z][a-z]+) (\d{1,2}), (\d{4})$)");
  static const std::regex my(R"(^([A-Z][a-z]+) (\d{4})$)");
  static const std::regex dmy(R"(^(\d{1,2}) ([A-Z][a-z]+) (\d{4})$)");
  static const std::regex iso(R"(^(\d{4})-(\d{2})-(\d{2})$)");
  const int deltas[] = {1, -1, 2, -2};
  if (std::regex_match(answer, m, year)) {
    int y = std::stoi(m[1].str());
    for (int d : deltas) out.push_back(std::to_string(y + d));
  } else if (std::regex_match(answer, m, mdy) && month_index(m[1].str())) {
    int day = std::stoi(m[2].str());
    for (int d : deltas)
      if (day + d >= 1 && day + d <= 28)
        out.push_back(m[1].str() + " " + std::to_string(day + d) + ", " + m[3].str());
  } else if (std::regex_match(answer, m, dmy) && month_index(m[2].str())) {
    int day = std::stoi(m[1].str());
    for (int d : deltas)
      if (day + d >= 1 && day + d <= 28)
        out.push_back(std::to_string(day + d) + " " + m[2].str() + " " + m[3].str());
  } else if (std::regex_match(answer, m, my) && month_index(m[1].str())) {
    int mon = month_index(m[1].str());
    for (int d : deltas)
      if (mon + d >= 1 && mon + d <= 12) out.push_back(month_names()[mon + d - 1] + " " + m[2].str());
  } else if (std::regex_match(answer, m, iso)) {
    int day = std::stoi(m[3].str());
    for (int d : deltas) {
      if (day + d < 1 || day + d > 28) continue;
      char buf[16];
      std::snprintf(buf, sizeof buf, "%02d", day + d);
      out.push_back(m[1].str() + "-" + m[2].str() + "-" + buf);
    }
  }
  return out;
}

std::vector<std::string> identifier_neighbors(const std::string& answer) {
  std::vector<std::string> out;
  static const std::vector<std::string> roman = {"I", "II", "III", "IV", "V", "VI"};
  auto rit = std::find(roman.begin(), roman.end(), answer);
  if (rit != roman.end()) {
    auto i = static_cast<int>(rit - roman.begin());
    for (int d : {1, -1, 2})
      if (i + d >= 0 && i + d < static_cast<int>(roman.size())) out.push_back(roman[i + d]);
    return out;
  }
  if (answer.size() == 1 && std::isupper(static_cast<unsigned char>(answer[0]))) {
    for (int d : {1, -1, 2}) {
      char c = static_cast<char>(answer[0] + d);
      if (c >= 'A' && c <= 'Z') out.push_back(std::string(1, c));
    }
    return out;
  }
  // bump the last digit run, keeping its width
  std::size_t e = answer.find_last_of("0123456789");
  if (e == std::string::npos) return out;
  std::size_t b = e;
  while (b > 0 && std::isdigit(static_cast<unsigned char>(answer[b - 1]))) --b;
  std::string run = answer.substr(b, e - b + 1);
  long long v = std::stoll(run.size() > 12 ? run.substr(run.size() - 12) : run);
  for (int d : {1, -1, 2}) {
    if (v + d < 0) continue;
    std::string nv = std::to_string(v + d);
    if (nv.size() < run.size()) nv = std::string(run.size() - nv.size(), '0') + nv;
    out.push_back(answer.substr(0, b) + nv + answer.substr(e + 1));
  }
  return out;
}

std::string norm(std::string_view s, GradingRule rule) { return normalize(s, rule); }

struct Pools {
  std::vector<std::string> similar;
  std::vector<std::string> far;
};

Pools distractor_pools(const EvidenceUnit& u, std::span<const EvidenceUnit> context) {
  Pools p;
  std::set<std::string> seen;
  seen.insert(norm(u.canonical_answer, u.grading_rule));
  for (const auto& a : u.alias_set) seen.insert(norm(a, u.grading_rule));
  const std::string anchor_norm = norm(u.anchor, GradingRule::ExactNormalized);
  auto admit = [&](const std::string& cand, std::vector<std::string>& into, bool sibling) {
    if (cand.empty()) return;
    std::string n = norm(cand, u.grading_rule);
    if (n.empty() || seen.count(n)) return;
    if (sibling) {
      auto toks = text::answer_tokens(norm(cand, GradingRule::ExactNormalized));
      if (text::contains_token_run(text::answer_tokens(anchor_norm), toks)) return;
    }
    seen.insert(n);
    into.push_back(cand);
  };
  std::vector<std::string> generated;
  if (u.grading_rule == GradingRule::NumericCanonical)
    generated = numeric_neighbors(u.canonical_answer);
  else if (u.grading_rule == GradingRule::DateCanonical)
    generated = date_neighbors(u.canonical_answer);
  if (generated.empty() && u.category != EvidenceCategory::PreciseDetail)
    generated = identifier_neighbors(u.canonical_answer);
  for (const auto& g : generated) admit(g, p.similar, false);
  const bool digits = has_digit(u.canonical_answer);
  for (const auto& s : context)
    if (s.unit_id != u.unit_id && s.category == u.category) admit(s.canonical_answer, p.similar, true);
  for (const auto& s : context)
    if (s.unit_id != u.unit_id && s.category != u.category && has_digit(s.canonical_answer) == digits)
      admit(s.canonical_answer, p.far, true);
  return p;
}

std::string replace_answer(const std::string& anchor, const std::string& answer, const std::string& with) {
  return text::replace_all(anchor, answer, with);
}

std::string as_statement(std::string s) {
  s = std::string(text::trim(s));
  if (s.empty()) return s;
  if (std::islower(static_cast<unsigned char>(s[0]))) s[0] = static_cast<char>(std::toupper(s[0]));
  char last = s.back();
  if (last != '.' && last != '?' && last != '!') s += '.';
  return s;
}

// Answer as spelled inside the anchor (canonical, else the first alias found).
std::string answer_in_anchor(const EvidenceUnit& u) {
  if (u.anchor.find(u.canonical_answer) != std::string::npos) return u.canonical_answer;
  for (const auto& a : u.alias_set)
    if (!a.empty() && u.anchor.find(a) != std::string::npos) return a;
  throw ItemUnbuildable("answer of " + u.unit_id + " is not spelled out in its anchor");
}

std::string negate(const std::string& statement) {
  static const std::regex re(R"(\b(is|are|was|were|has|have|can|will|does|did)\b)");
  std::smatch m;
  if (!std::regex_search(statement, m, re)) return {};
  auto pos = static_cast<std::size_t>(m.position(0) + m.length(0));
  return statement.substr(0, pos) + " not" + statement.substr(pos);
}

std::string reversed_relation(const EvidenceUnit& u) {
  if (u.connective.empty() || u.premise.empty()) return {};
  if (u.connective == "if") return "If " + u.canonical_answer + ", " + u.premise;
  return u.canonical_answer + " " + u.connective + " " + u.premise;
}

template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  rng.shuffle(std::span<T>(v.data(), v.size()));
}

std::vector<Option> letter_options(std::vector<std::string> texts) {
  std::vector<Option> out;
  for (std::size_t i = 0; i < texts.size(); ++i)
    out.push_back({static_cast<char>('A' + i), std::move(texts[i])});
  return out;
}

}  // namespace

ExamItem instantiate_item(const EvidenceUnit& unit, QuestionType qtype, const ItemSpec& spec,
                          std::uint64_t rng_seed, std::span<const EvidenceUnit> context) {
  check_item_spec(spec);
  Rng rng(rng_seed);
  ExamItem item;
  item.doc_id = unit.doc_id;
  item.evidence_ids = {unit.unit_id};
  item.qtype = qtype;
  item.normalization = unit.grading_rule == GradingRule::OptionSet ? GradingRule::ExactNormalized
                                                                   : unit.grading_rule;
  item.anchors = {unit.anchor};
  const std::string ans = answer_in_anchor(unit);
  Pools pools = distractor_pools(unit, context);

  switch (qtype) {
    case QuestionType::FB: {
      std::string cloze = replace_answer(unit.anchor, ans, std::string(kBlank));
      std::vector<std::string> blanks = {unit.canonical_answer};
      std::vector<std::vector<std::string>> aliases = {unit.alias_set};
      if (spec.fb_blanks == 2) {
        for (const auto& s : context) {
          if (s.unit_id == unit.unit_id || s.category == EvidenceCategory::ConstraintRelation) continue;
          std::size_t p2 = cloze.find(s.canonical_answer);
          if (s.canonical_answer.size() < 2 || p2 == std::string::npos) continue;
          std::size_t p1 = cloze.find(kBlank);
          std::string c2 = cloze.substr(0, p2) + std::string(kBlank) + cloze.substr(p2 + s.canonical_answer.size());
          cloze = c2;
          if (p2 < p1) {
            blanks.insert(blanks.begin(), s.canonical_answer);
            aliases.insert(aliases.begin(), s.alias_set);
          } else {
            blanks.push_back(s.canonical_answer);
            aliases.push_back(s.alias_set);
          }
          item.evidence_ids.push_back(s.unit_id);
          if (s.grading_rule != item.normalization) item.normalization = GradingRule::ExactNormalized;
          break;
        }
      }
      item.prompt = std::string(blanks.size() == 2 ? "Fill in the blanks in the following statement."
                                                   : "Fill in the blank in the following statement.") +
                    "\n" + as_statement(cloze);
      item.gold = AnswerKey::of_blanks(blanks);
      item.blank_aliases = aliases;
      std::vector<std::string> decoys = pools.similar;
      decoys.insert(decoys.end(), pools.far.begin(), pools.far.end());
      if (decoys.size() > 3) decoys.resize(3);
      item.decoys = decoys;
      return item;
    }
    case QuestionType::SC: {
      const auto need = static_cast<std::size_t>(spec.sc_options - 1);
      auto similar = pools.similar;
      shuffle_vec(similar, rng);
      std::vector<std::string> chosen;
      std::size_t d = std::min<std::size_t>(static_cast<std::size_t>(spec.sc_similar), similar.size());
      chosen.assign(similar.begin(), similar.begin() + static_cast<std::ptrdiff_t>(d));
      std::vector<std::string> rest(similar.begin() + static_cast<std::ptrdiff_t>(d), similar.end());
      rest.insert(rest.end(), pools.far.begin(), pools.far.end());
      shuffle_vec(rest, rng);
      for (std::size_t i = 0; i < rest.size() && chosen.size() < need; ++i) chosen.push_back(rest[i]);
      if (chosen.size() < need) throw InsufficientDistractors(unit.unit_id);
      std::vector<std::string> texts = chosen;
      texts.push_back(unit.canonical_answer);
      shuffle_vec(texts, rng);
      char gold = 0;
      for (std::size_t i = 0; i < texts.size(); ++i)
        if (texts[i] == unit.canonical_answer) gold = static_cast<char>('A' + i);
      item.options = letter_options(texts);
      item.gold = AnswerKey::of_letters({gold});
      item.prompt = "Which option correctly completes the statement?\n" +
                    as_statement(replace_answer(unit.anchor, ans, std::string(kBlank)));
      return item;
    }
    case QuestionType::MC: {
      // second correct statement: another fact of the same document
      std::vector<const EvidenceUnit*> mates;
      for (const auto& s : context)
        if (s.unit_id != unit.unit_id && s.anchor != unit.anchor) mates.push_back(&s);
      shuffle_vec(mates, rng);
      std::stable_sort(mates.begin(), mates.end(), [&](const EvidenceUnit* a, const EvidenceUnit* b) {
        return (a->category == unit.category) > (b->category == unit.category);
      });
      auto perturbations = [&](const EvidenceUnit& u, const Pools& pl) {
        std::vector<std::string> out;
        const std::string a = answer_in_anchor(u);
        for (const auto* pool : {&pl.similar, &pl.far})
          for (const auto& d : *pool) out.push_back(as_statement(replace_answer(u.anchor, a, d)));
        if (auto rev = reversed_relation(u); !rev.empty()) out.insert(out.begin(), as_statement(rev));
        return out;
      };
      auto own_false = perturbations(unit, pools);
      if (own_false.empty()) throw InsufficientDistractors(unit.unit_id);
      const auto n_false = static_cast<std::size_t>(spec.mc_options - spec.mc_correct);
      for (const EvidenceUnit* w : mates) {
        std::string a_true = as_statement(unit.anchor);
        std::string b_true = as_statement(w->anchor);
        if (norm(a_true, GradingRule::ExactNormalized) == norm(b_true, GradingRule::ExactNormalized)) continue;
        std::vector<std::string> mate_false;
        try {
          mate_false = perturbations(*w, distractor_pools(*w, context));
        } catch (const ItemUnbuildable&) {
          continue;
        }
        if (mate_false.empty()) continue;
        std::vector<std::string> falses;
        std::set<std::string> used = {norm(a_true, GradingRule::ExactNormalized),
                                      norm(b_true, GradingRule::ExactNormalized)};
        auto take = [&](const std::vector<std::string>& from) {
          for (const auto& f : from) {
            if (used.insert(norm(f, GradingRule::ExactNormalized)).second) {
              falses.push_back(f);
              return true;
            }
          }
          return false;
        };
        take(own_false);
        take(mate_false);
        while (falses.size() < n_false && (take(own_false) || take(mate_false))) {
        }
        if (falses.size() < n_false) continue;
        falses.resize(n_false);
        std::vector<std::string> texts = falses;
        texts.push_back(a_true);
        texts.push_back(b_true);
        shuffle_vec(texts, rng);
        LetterSet gold;
        for (std::size_t i = 0; i < texts.size(); ++i)
          if (texts[i] == a_true || texts[i] == b_true) gold.insert(static_cast<char>('A' + i));
        item.options = letter_options(texts);
        item.gold = AnswerKey::of_letters(gold);
        item.evidence_ids.push_back(w->unit_id);
        item.anchors.push_back(w->anchor);
        item.normalization = GradingRule::ExactNormalized;
        item.prompt = "Which two of the following statements are accurate?";
        return item;
      }
      throw InsufficientDistractors(unit.unit_id);
    }
    case QuestionType::TF: {
      bool truth = rng.bernoulli(0.5);
      std::string statement;
      if (!truth) {
        statement = reversed_relation(unit);
        if (statement.empty()) {
          auto similar = pools.similar;
          shuffle_vec(similar, rng);
          if (similar.empty()) similar = pools.far;
          if (!similar.empty()) statement = replace_answer(unit.anchor, ans, similar.front());
        }
        if (statement.empty()) statement = negate(unit.anchor);
        if (statement.empty()) truth = true;  // no single-perturbation falsehood available
      }
      if (truth) statement = unit.anchor;
      item.gold = AnswerKey::of_bool(truth);
      item.normalization = GradingRule::ExactNormalized;
      item.prompt = "True or false: " + as_statement(statement);
      return item;
    }
  }
  throw ItemUnbuildable("unsupported question type");
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::size_t count_blanks(std::string_view prompt) {
  std::size_t n = 0;
  for (std::size_t p = prompt.find(kBlank); p != std::string_view::npos; p = prompt.find(kBlank, p + kBlank.size()))
    ++n;
  return n;
}

void item_issues(const ExamItem& item, std::vector<ValidationIssue>& out) {
  using K = ValidationIssue::Kind;
  auto issue = [&](K k, std::string d) { out.push_back({item.item_id, k, std::move(d)}); };
  switch (item.qtype) {
    case QuestionType::FB: {
      std::size_t b = count_blanks(item.prompt);
      if (item.gold.kind != AnswerKey::Kind::Blanks || b < 1 || b > 2 || b != item.gold.blanks.size() ||
          !item.options.empty())
        issue(K::Malformed, "fill-in item needs 1-2 blanks matching its gold");
      if (item.gold.kind == AnswerKey::Kind::Blanks) {
        for (const auto& d : item.decoys)
          for (const auto& g : item.gold.blanks)
            if (normalize(d, item.normalization) == normalize(g, item.normalization))
              issue(K::AmbiguousAnswer, "decoy equals gold: " + d);
      }
      break;
    }
    case QuestionType::SC:
    case QuestionType::MC: {
      std::size_t want = item.qtype == QuestionType::SC ? 1 : 2;
      if (item.gold.kind != AnswerKey::Kind::Letters || item.options.size() < 4 || item.options.size() > 5 ||
          item.gold.letters.size() != want)
        issue(K::Malformed, "choice item has the wrong option or gold count");
      std::set<std::string> seen;
      for (const auto& o : item.options)
        if (!seen.insert(normalize(o.text, item.normalization)).second)
          issue(K::AmbiguousAnswer, "two options normalize equal: " + o.text);
      break;
    }
    case QuestionType::TF:
      if (item.gold.kind != AnswerKey::Kind::Boolean || !item.options.empty())
        issue(K::Malformed, "true/false item must have a boolean gold and no options");
      break;
  }
  if (contains_probe_phrase(render_item(item)))
    issue(K::ConfirmationProbe, "prompt contains a confirmation-probe phrase");
  bool ok = false;
  try {
    ok = grade_item(item, RawResponse{item.item_id, gold_response_text(item), 0, false}).correct;
  } catch (const Error&) {
    ok = false;
  }
  if (!ok) issue(K::NonDeterministicGold, "gold answer does not grade as correct");
}

}  // namespace

std::vector<ValidationIssue> validate_exam(const Exam& exam) {
  std::vector<ValidationIssue> out;
  for (const auto& item : exam.items) item_issues(item, out);
  return out;
}

// ---------------------------------------------------------------------------
// Assembly

Exam assemble_exam(std::span<const EvidenceUnit> units, std::size_t n_items, std::uint64_t seed,
                   const ExamSpec& spec) {
  if (n_items == 0 || n_items % 4 != 0)
    throw SpecOutOfRange("exam size must be a positive multiple of 4, got " + std::to_string(n_items));
  check_item_spec(spec.item);
  const std::size_t need = min_distinct_evidence(n_items);
  if (units.size() < need) throw InsufficientEvidence(need, units.size());
  const std::string doc_id = units.front().doc_id;

  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "assemble", doc_id));
  rng.shuffle(std::span<std::size_t>(order));

  const std::size_t quota = n_items / 4;
  std::array<std::vector<ExamItem>, 4> by_type;
  std::vector<bool> used(units.size(), false);
  std::map<std::string, std::set<QuestionType>> unit_types;

  std::set<std::string> rendered;  // identical questions from different units count once
  auto attempt = [&](std::size_t idx, QuestionType q) -> std::optional<ExamItem> {
    const auto& u = units[idx];
    try {
      auto item = instantiate_item(u, q, spec.item, derive_seed(seed, u.unit_id, to_string(q)), units);
      item.item_id = "tmp";
      std::vector<ValidationIssue> issues;
      item_issues(item, issues);
      if (!issues.empty()) return std::nullopt;
      if (!rendered.insert(render_item(item)).second) return std::nullopt;
      return item;
    } catch (const ItemUnbuildable&) {
      return std::nullopt;
    }
  };

  // Pass 1: one item per unit, walking each unit's preference list.
  for (std::size_t rank = 0; rank < 4; ++rank) {
    for (auto idx : order) {
      if (used[idx]) continue;
      QuestionType q = preferred_qtypes(units[idx].category)[rank];
      if (by_type[index_of(q)].size() >= quota) continue;
      if (auto item = attempt(idx, q)) {
        used[idx] = true;
        unit_types[units[idx].unit_id].insert(q);
        by_type[index_of(q)].push_back(std::move(*item));
      }
    }
  }
  // Pass 2: limited redundancy for still-open slots; the repeated unit links
  // its items through a shared paraphrase group.
  const std::size_t max_redundant = n_items / 4;
  std::size_t redundant = 0;
  for (std::size_t rank = 0; rank < 4 && redundant < max_redundant; ++rank) {
    for (auto idx : order) {
      if (!used[idx] || redundant >= max_redundant) continue;
      QuestionType q = preferred_qtypes(units[idx].category)[rank];
      auto& have = unit_types[units[idx].unit_id];
      if (have.count(q) || by_type[index_of(q)].size() >= quota) continue;
      if (auto item = attempt(idx, q)) {
        item->paraphrase_group = units[idx].unit_id;
        for (auto& bucket : by_type)
          for (auto& it : bucket)
            if (it.evidence_ids.front() == units[idx].unit_id) it.paraphrase_group = units[idx].unit_id;
        have.insert(q);
        by_type[index_of(q)].push_back(std::move(*item));
        ++redundant;
      }
    }
  }

  std::set<std::string> distinct;
  std::size_t total = 0;
  for (const auto& bucket : by_type) {
    total += bucket.size();
    for (const auto& it : bucket) distinct.insert(it.evidence_ids.begin(), it.evidence_ids.end());
  }
  if (total < n_items || distinct.size() < need) throw InsufficientEvidence(need, distinct.size());

  Exam exam;
  exam.doc_id = doc_id;
  exam.seed = seed;
  std::size_t k = 0;
  for (auto& bucket : by_type) {
    for (auto& it : bucket) {
      char buf[16];
      std::snprintf(buf, sizeof buf, "/q%02zu", ++k);
      it.item_id = doc_id + buf;
      exam.items.push_back(std::move(it));
    }
  }
  return exam;
}

// ---------------------------------------------------------------------------
// Rendering

std::string render_item(const ExamItem& item) {
  std::string s = item.prompt;
  for (const auto& o : item.options) {
    s += "\n";
    s += o.letter;
    s += ". ";
    s += o.text;
  }
  switch (item.qtype) {
    case QuestionType::FB:
      s += item.gold.blanks.size() > 1 ? "\nReply with the missing text for each blank, separated by semicolons."
                                       : "\nReply with the missing text only.";
      break;
    case QuestionType::SC: s += "\nReply with the letter of the correct option."; break;
    case QuestionType::MC: s += "\nReply with the letters of both correct options."; break;
    case QuestionType::TF: s += "\nReply with True or False."; break;
  }
  return s;
}

std::string render_batch(std::span<const ExamItem> items) {
  std::string s =
      "Answer each numbered question below. Reply with one line per question in the form "
      "'<number>. <answer>'.";
  for (std::size_t i = 0; i < items.size(); ++i) {
    s += "\n\n" + std::to_string(i + 1) + ". ";
    s += render_item(items[i]);
  }
  return s;
}

std::string render_exam_text(const Exam& exam) {
  std::string s = "Exam for " + exam.doc_id + " (" + std::to_string(exam.items.size()) + " items)\n";
  std::size_t i = 0;
  for (const auto& item : exam.items) {
    s += "\n[" + std::to_string(++i) + "] " + std::string(to_string(item.qtype)) + "  " + item.item_id + "\n";
    s += render_item(item);
    s += "\nGold: " + to_display(item.gold) + "\n";
  }
  return s;
}

std::string gold_response_text(const ExamItem& item) {
  switch (item.gold.kind) {
    case AnswerKey::Kind::Blanks: return text::join(item.gold.blanks, "; ");
    case AnswerKey::Kind::Letters: {
      std::string s;
      std::size_t i = 0;
      for (char c : item.gold.letters) {
        if (i++) s += " and ";
        s += c;
      }
      return s;
    }
    case AnswerKey::Kind::Boolean: return item.gold.truth ? "True" : "False";
  }
  return {};
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const AnswerKey& k) {
  switch (k.kind) {
    case AnswerKey::Kind::Letters: {
      std::vector<std::string> l;
      for (char c : k.letters) l.emplace_back(1, c);
      j = nlohmann::json{{"letters", l}};
      break;
    }
    case AnswerKey::Kind::Blanks: j = nlohmann::json{{"blanks", k.blanks}}; break;
    case AnswerKey::Kind::Boolean: j = nlohmann::json{{"boolean", k.truth}}; break;
  }
}

void from_json(const nlohmann::json& j, AnswerKey& k) {
  if (j.contains("letters")) {
    LetterSet l;
    for (const auto& s : j["letters"]) l.insert(s.get<std::string>().at(0));
    k = AnswerKey::of_letters(l);
  } else if (j.contains("blanks")) {
    k = AnswerKey::of_blanks(j["blanks"].get<std::vector<std::string>>());
  } else {
    k = AnswerKey::of_bool(j.at("boolean").get<bool>());
  }
}

void to_json(nlohmann::json& j, const ExamItem& item) {
  nlohmann::json opts = nlohmann::json::array();
  for (const auto& o : item.options) opts.push_back({{"letter", std::string(1, o.letter)}, {"text", o.text}});
  j = nlohmann::json{{"item_id", item.item_id},
                     {"doc_id", item.doc_id},
                     {"evidence_ids", item.evidence_ids},
                     {"qtype", to_string(item.qtype)},
                     {"prompt", item.prompt},
                     {"options", opts},
                     {"gold", item.gold},
                     {"normalization", to_string(item.normalization)},
                     {"blank_aliases", item.blank_aliases},
                     {"anchors", item.anchors},
                     {"decoys", item.decoys}};
  j["paraphrase_group"] = item.paraphrase_group ? nlohmann::json(*item.paraphrase_group) : nlohmann::json();
}

void from_json(const nlohmann::json& j, ExamItem& item) {
  item.item_id = j.at("item_id").get<std::string>();
  item.doc_id = j.at("doc_id").get<std::string>();
  item.evidence_ids = j.at("evidence_ids").get<std::vector<std::string>>();
  item.qtype = question_type_from_string(j.at("qtype").get<std::string>());
  item.prompt = j.at("prompt").get<std::string>();
  item.options.clear();
  for (const auto& o : j.value("options", nlohmann::json::array()))
    item.options.push_back({o.at("letter").get<std::string>().at(0), o.at("text").get<std::string>()});
  item.gold = j.at("gold").get<AnswerKey>();
  item.normalization = grading_rule_from_string(j.at("normalization").get<std::string>());
  item.blank_aliases = j.value("blank_aliases", std::vector<std::vector<std::string>>{});
  item.anchors = j.value("anchors", std::vector<std::string>{});
  item.decoys = j.value("decoys", std::vector<std::string>{});
  item.paraphrase_group.reset();
  if (j.contains("paraphrase_group") && !j["paraphrase_group"].is_null())
    item.paraphrase_group = j["paraphrase_group"].get<std::string>();
}

void to_json(nlohmann::json& j, const Exam& exam) {
  j = nlohmann::json{{"doc_id", exam.doc_id}, {"seed", exam.seed}, {"items", exam.items}};
}

void from_json(const nlohmann::json& j, Exam& exam) {
  exam.doc_id = j.at("doc_id").get<std::string>();
  exam.seed = j.at("seed").get<std::uint64_t>();
  exam.items = j.at("items").get<std::vector<ExamItem>>();
}

}  // namespace ragaudit
