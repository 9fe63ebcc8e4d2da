#include "ragaudit/evidence.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <optional>
#include <tuple>
#include <map>
#include <regex>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::string_view to_string(EvidenceCategory c) {
  switch (c) {
    case EvidenceCategory::PreciseDetail: return "PD";
    case EvidenceCategory::ProperNounTerm: return "PNT";
    case EvidenceCategory::DefinitionalStatement: return "DS";
    case EvidenceCategory::MetadataCue: return "MDC";
    case EvidenceCategory::ConstraintRelation: return "CR";
  }
  return "PD";
}

EvidenceCategory category_from_string(std::string_view s) {
  for (auto c : kAllCategories)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown evidence category: " + std::string(s));
}

bool rule_permitted(EvidenceCategory c, GradingRule rule) {
  switch (rule) {
    case GradingRule::ExactNormalized: return true;
    case GradingRule::NumericCanonical:
    case GradingRule::DateCanonical: return c == EvidenceCategory::PreciseDetail;
    case GradingRule::OptionSet: return c != EvidenceCategory::PreciseDetail;
  }
  return false;
}

namespace {

bool contains_normalized(std::string_view hay, std::string_view needle, GradingRule rule) {
  auto h = text::answer_tokens(normalize(hay, rule));
  auto n = text::answer_tokens(normalize(needle, rule));
  return !n.empty() && text::contains_token_run(h, n);
}

}  // namespace

bool validate_unit(const EvidenceUnit& unit, const Document& doc) {
  if (unit.canonical_answer.empty() || unit.anchor.empty()) return false;
  if (!rule_permitted(unit.category, unit.grading_rule)) return false;
  if (unit.char_start >= unit.char_end || unit.char_end > doc.text.size()) return false;
  std::string_view span(doc.text.data() + unit.char_start, unit.char_end - unit.char_start);
  if (span != unit.anchor) return false;
  if (text::count_ws_tokens(span) > kMaxAnchorTokens) return false;
  if (span.find(unit.canonical_answer) != std::string_view::npos) return true;
  for (const auto& a : unit.alias_set)
    if (!a.empty() && span.find(a) != std::string_view::npos) return true;
  return contains_normalized(span, unit.canonical_answer, unit.grading_rule);
}

std::vector<std::string> make_aliases(std::string_view answer, GradingRule rule) {
  std::set<std::string> out;
  std::string a(answer);
  if (rule == GradingRule::NumericCanonical) {
    std::string canon = normalize(a, rule);
    out.insert(canon);
    // "120 mg" <-> "120mg"
    std::string squeezed;
    for (std::size_t i = 0; i < canon.size(); ++i) {
      if (canon[i] == ' ' && i > 0 && std::isdigit(static_cast<unsigned char>(canon[i - 1])) &&
          i + 1 < canon.size() && std::isalpha(static_cast<unsigned char>(canon[i + 1])))
        continue;
      squeezed += canon[i];
    }
    out.insert(squeezed);
    std::string no_commas;
    for (char c : a)
      if (c != ',') no_commas += c;
    out.insert(no_commas);
  } else if (rule == GradingRule::DateCanonical) {
    out.insert(normalize(a, rule));
  }
  out.erase(a);
  out.erase("");
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Rule-based extraction

namespace {

struct Tok {
  std::size_t b, e;     // raw token bytes
  std::size_t cb, ce;   // token bytes with edge punctuation stripped
  std::string core;     // text[cb, ce)
  std::string lower;    // ASCII-lowered core
  bool clause_end;      // raw token ends with , ; :
  bool sentence_end;
};

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool edge_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '(' ||
         c == ')' || c == '"' || c == '\'' || c == '[' || c == ']';
}

const std::set<std::string>& abbreviations() {
  static const std::set<std::string> s = {"e.g.", "i.e.", "al.", "fig.", "sec.", "vs.", "no.",
                                          "approx.", "dr.", "st.", "cf.", "ca.", "v."};
  return s;
}

std::vector<Tok> tokenize(const std::string& txt) {
  std::vector<Tok> toks;
  for (auto piece : text::split_ws(txt)) {
    Tok t{};
    t.b = static_cast<std::size_t>(piece.data() - txt.data());
    t.e = t.b + piece.size();
    t.cb = t.b;
    t.ce = t.e;
    while (t.cb < t.ce && edge_punct(txt[t.cb])) ++t.cb;
    while (t.ce > t.cb && edge_punct(txt[t.ce - 1])) --t.ce;
    // keep "%" and closing parens of identifiers out of the strip list; a lone
    // possessive is trimmed so "KRX7's" yields "KRX7".
    if (t.ce - t.cb > 2 && txt.compare(t.ce - 2, 2, "'s") == 0) t.ce -= 2;
    t.core = txt.substr(t.cb, t.ce - t.cb);
    t.lower = ascii_lower(t.core);
    char last = piece.back();
    while (piece.size() > 1 && (last == ')' || last == '"' || last == '\'')) {
      piece.remove_suffix(1);
      last = piece.back();
    }
    t.clause_end = last == ',' || last == ';' || last == ':';
    bool stop = last == '.' || last == '!' || last == '?';
    if (stop && last == '.') {
      std::string low = ascii_lower(piece);
      if (abbreviations().count(low)) stop = false;
      // initials such as "J."
      if (piece.size() == 2 && std::isupper(static_cast<unsigned char>(piece[0]))) stop = false;
    }
    t.sentence_end = stop;
    toks.push_back(std::move(t));
  }
  return toks;
}

struct Sentence {
  std::size_t lo, hi;  // token index range
};

std::vector<Sentence> sentences(const std::vector<Tok>& toks) {
  std::vector<Sentence> out;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].sentence_end) {
      out.push_back({lo, i + 1});
      lo = i + 1;
    }
  }
  if (lo < toks.size()) out.push_back({lo, toks.size()});
  return out;
}

struct Candidate {
  EvidenceCategory category;
  std::size_t a0, a1;  // answer token range
  std::size_t ab, ae;  // answer byte range
  GradingRule rule;
  std::size_t w0 = 0, w1 = 0;  // forced window tokens (0,0 = choose)
  std::string premise{};
  std::string connective{};
};

class Builder {
 public:
  Builder(const Document& doc) : doc_(doc), toks_(tokenize(doc.text)), sents_(sentences(toks_)) {
    sent_of_.resize(toks_.size());
    for (std::size_t s = 0; s < sents_.size(); ++s)
      for (std::size_t i = sents_[s].lo; i < sents_[s].hi; ++i) sent_of_[i] = s;
  }

  const std::vector<Tok>& toks() const { return toks_; }
  const std::vector<Sentence>& sents() const { return sents_; }
  const Sentence& sentence_of(std::size_t tok) const { return sents_[sent_of_[tok]]; }
  const std::string& txt() const { return doc_.text; }

  std::string bytes(std::size_t b, std::size_t e) const { return doc_.text.substr(b, e - b); }

  // Answer byte range over tokens [a0, a1): from the start of the first core to
  // the end of the last core.
  std::pair<std::size_t, std::size_t> core_span(std::size_t a0, std::size_t a1) const {
    return {toks_[a0].cb, toks_[a1 - 1].ce};
  }

  std::optional<EvidenceUnit> make(const Candidate& c) const {
    std::size_t w0 = c.w0, w1 = c.w1;
    if (w0 == w1) std::tie(w0, w1) = window(c.a0, c.a1);
    if (w1 - w0 > kMaxAnchorTokens || c.a0 < w0 || c.a1 > w1) return std::nullopt;
    std::size_t b = toks_[w0].b, e = toks_[w1 - 1].e;
    // strip unbalanced edge punctuation but never cut into the answer
    while (e > c.ae && edge_punct(doc_.text[e - 1])) --e;
    while (b < c.ab && edge_punct(doc_.text[b])) ++b;
    if (b >= e) return std::nullopt;
    EvidenceUnit u;
    u.doc_id = doc_.doc_id;
    u.category = c.category;
    u.char_start = b;
    u.char_end = e;
    u.anchor = doc_.text.substr(b, e - b);
    u.canonical_answer = doc_.text.substr(c.ab, c.ae - c.ab);
    u.grading_rule = c.rule;
    u.alias_set = make_aliases(u.canonical_answer, c.rule);
    u.premise = c.premise;
    u.connective = c.connective;
    return u;
  }

 private:
  // Anchor window: the whole sentence when short, else the clause holding the
  // answer, else a window centred on the answer.
  std::pair<std::size_t, std::size_t> window(std::size_t a0, std::size_t a1) const {
    const auto& s = sentence_of(a0);
    std::size_t lo = s.lo, hi = s.hi;
    if (hi - lo <= kMaxAnchorTokens) return {lo, hi};
    std::size_t cs = a0;
    while (cs > lo && !toks_[cs - 1].clause_end) --cs;
    std::size_t ce = a1;
    while (ce < hi && !toks_[ce - 1].clause_end) ++ce;
    if (ce - cs <= kMaxAnchorTokens && ce - cs >= 6) return {cs, ce};
    if (ce - cs < 6) {
      // short clause: extend rightwards, then leftwards
      std::size_t e = std::min(hi, cs + kMaxAnchorTokens);
      std::size_t b = cs;
      while (e - b < kMaxAnchorTokens && b > lo) --b;
      if (a1 <= e) return {b, e};
    }
    std::size_t len = a1 - a0;
    if (len >= kMaxAnchorTokens) return {a0, a0 + len};
    std::size_t pad = (kMaxAnchorTokens - len) / 2;
    std::size_t b = a0 >= lo + pad ? a0 - pad : lo;
    std::size_t e = std::min(hi, b + kMaxAnchorTokens);
    b = e >= lo + kMaxAnchorTokens ? std::max(lo, e - kMaxAnchorTokens) : lo;
    return {b, e};
  }

  const Document& doc_;
  std::vector<Tok> toks_;
  std::vector<Sentence> sents_;
  std::vector<std::size_t> sent_of_;
};

const std::map<std::string, int>& months() {
  static const std::map<std::string, int> m = {
      {"january", 1}, {"february", 2}, {"march", 3},     {"april", 4},
      {"may", 5},     {"june", 6},     {"july", 7},      {"august", 8},
      {"september", 9}, {"october", 10}, {"november", 11}, {"december", 12}};
  return m;
}

bool is_month(const Tok& t) {
  return months().count(t.lower) && text::starts_with_upper(t.core);
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool is_day(const Tok& t) {
  if (!all_digits(t.core) || t.core.size() > 2) return false;
  int d = std::stoi(t.core);
  return d >= 1 && d <= 31;
}

bool is_year(const Tok& t) {
  static const std::regex re("(1[6-9]|20)\\d\\d");
  return std::regex_match(t.core, re);
}

bool is_number(const std::string& s) {
  static const std::regex re("(\\d{1,3}(,\\d{3})+|\\d+)(\\.\\d+)?%?");
  return std::regex_match(s, re);
}

bool is_number_with_unit(const std::string& s) {
  static const std::regex re(
      "\\d+(\\.\\d+)?(mg|g|kg|ml|mL|L|mcg|ug|nm|mm|cm|kDa|Hz|mmHg|IU|mmol|nmol|U)");
  return std::regex_match(s, re);
}

const std::set<std::string>& measure_units() {
  static const std::set<std::string> s = {
      "mg", "g", "kg", "ml", "l", "mcg", "ug", "nm", "mm", "cm", "kda", "hz", "mmhg", "iu",
      "mmol", "nmol", "mmol/l", "mg/dl", "mg/kg", "ng/ml", "u/l", "µg", "μm", "°c", "percent"};
  return s;
}

const std::set<std::string>& cap_stopwords() {
  static const std::set<std::string> s = {
      "the", "a", "an", "in", "on", "of", "for", "and", "but", "or", "this", "these", "that", "those",
      "it", "its", "we", "our", "they", "their", "at", "by", "with", "from", "to", "as", "after",
      "before", "during", "when", "while", "if", "then", "however", "although", "both", "each",
      "all", "most", "some", "many", "several", "patients", "results", "participants", "overall",
      "table", "figure", "section", "appendix", "version", "phase", "further", "here", "there",
      "such", "one", "two", "three", "no", "not", "is", "was", "were", "are", "be", "between",
      "among", "within", "under", "over", "per", "since", "because", "thus", "also", "other"};
  return s;
}

bool roman_numeral(const std::string& s) {
  static const std::regex re("(I|II|III|IV|V|VI|VII|VIII|IX|X)");
  return std::regex_match(s, re);
}

bool acronym(const Tok& t) {
  static const std::regex re("[A-Z][A-Z0-9]*(-[A-Z0-9]+)*");
  if (!std::regex_match(t.core, re)) return false;
  if (!text::all_caps_token(t.core) || roman_numeral(t.core)) return false;
  return !(t.core.rfind("NCT", 0) == 0 || t.core.rfind("ISRCTN", 0) == 0 || t.core == "ISO" ||
           t.core == "PMID" || t.core == "DOI");
}

bool determiner(const std::string& lower) {
  return lower == "the" || lower == "a" || lower == "an" || lower == "this" || lower == "these";
}

// --- PD ---------------------------------------------------------------------

void precise_details(const Builder& bld, const std::vector<bool>& taken, std::vector<Candidate>& out) {
  const auto& t = bld.toks();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (taken[i]) continue;
    const auto& s = bld.sentence_of(i);
    auto add = [&](std::size_t a0, std::size_t a1, GradingRule rule) {
      auto [ab, ae] = bld.core_span(a0, a1);
      out.push_back({EvidenceCategory::PreciseDetail, a0, a1, ab, ae, rule});
    };
    // Month D, YYYY / Month YYYY
    if (is_month(t[i]) && i + 1 < s.hi) {
      if (is_day(t[i + 1]) && i + 2 < s.hi && is_year(t[i + 2])) {
        add(i, i + 3, GradingRule::DateCanonical);
        i += 2;
        continue;
      }
      if (is_year(t[i + 1])) {
        add(i, i + 2, GradingRule::DateCanonical);
        i += 1;
        continue;
      }
    }
    // D Month YYYY
    if (is_day(t[i]) && i + 2 < s.hi && is_month(t[i + 1]) && is_year(t[i + 2])) {
      add(i, i + 3, GradingRule::DateCanonical);
      i += 2;
      continue;
    }
    static const std::regex iso("\\d{4}-\\d{2}-\\d{2}");
    if (std::regex_match(t[i].core, iso)) {
      add(i, i + 1, GradingRule::DateCanonical);
      continue;
    }
    if (is_year(t[i])) {
      add(i, i + 1, GradingRule::DateCanonical);
      continue;
    }
    if (is_number_with_unit(t[i].core)) {
      add(i, i + 1, GradingRule::NumericCanonical);
      continue;
    }
    if (is_number(t[i].core)) {
      bool unit = i + 1 < s.hi && !t[i].clause_end && measure_units().count(t[i + 1].lower) &&
                  !taken[i + 1];
      if (unit) {
        add(i, i + 2, GradingRule::NumericCanonical);
        ++i;
        continue;
      }
      bool strong = t[i].core.size() >= 2 || t[i].core.back() == '%';
      if (strong) add(i, i + 1, GradingRule::NumericCanonical);
    }
  }
}

// --- MDC --------------------------------------------------------------------

void metadata_cues(const Builder& bld, std::vector<bool>& taken, std::vector<Candidate>& out) {
  const auto& t = bld.toks();
  static const std::set<std::string> heads = {"section", "sections", "sec.", "chapter", "table",
                                              "figure", "fig.", "appendix", "protocol", "amendment",
                                              "cohort", "arm", "supplement", "module", "clause"};
  static const std::set<std::string> version_heads = {"version", "release", "revision", "rev."};
  static const std::regex ref_val("([A-Z]?\\d+(\\.\\d+)*[a-z]?|[IVX]{1,4}|[A-Z])");
  static const std::regex ver_val("\\d+(\\.\\d+)+");
  static const std::regex vtag("v\\d+(\\.\\d+)+");
  static const std::regex ident(
      "(NCT\\d{8}|ISRCTN\\d{8}|PMID:?\\d{6,9}|ISO\\d{4,5}(:\\d{4})?|[A-Z]{2,5}-\\d{3,6}-[A-Z0-9]{1,4})");
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& s = bld.sentence_of(i);
    auto add = [&](std::size_t a0, std::size_t a1) {
      auto [ab, ae] = bld.core_span(a0, a1);
      out.push_back({EvidenceCategory::MetadataCue, a0, a1, ab, ae, GradingRule::ExactNormalized});
      for (std::size_t k = a0; k < a1; ++k) taken[k] = true;
    };
    const std::string raw_lower = ascii_lower(bld.bytes(t[i].b, t[i].e));
    std::string head = t[i].lower;
    if (raw_lower == "sec." || raw_lower == "fig." || raw_lower == "rev.") head = raw_lower;
    if (i + 1 < s.hi && !t[i].clause_end && heads.count(head) && text::starts_with_upper(t[i].core) &&
        std::regex_match(t[i + 1].core, ref_val)) {
      taken[i] = true;
      add(i + 1, i + 2);
      ++i;
      continue;
    }
    if (i + 1 < s.hi && version_heads.count(head) && std::regex_match(t[i + 1].core, ver_val)) {
      taken[i] = true;
      add(i + 1, i + 2);
      ++i;
      continue;
    }
    if (head == "phase" && i + 1 < s.hi && text::starts_with_upper(t[i].core) &&
        std::regex_match(t[i + 1].core, std::regex("(I|II|III|IV|[1-4])"))) {
      taken[i] = true;
      add(i + 1, i + 2);
      ++i;
      continue;
    }
    if (std::regex_match(t[i].core, vtag)) {
      add(i, i + 1);
      continue;
    }
    if (std::regex_match(t[i].core, ident)) {
      add(i, i + 1);
      continue;
    }
    // "ISO 15189", "PMID 1234567"
    if ((t[i].core == "ISO" || t[i].core == "PMID") && i + 1 < s.hi &&
        std::regex_match(t[i + 1].core, std::regex("\\d{4,9}(:\\d{4})?"))) {
      add(i, i + 2);
      ++i;
    }
  }
}

// --- PNT --------------------------------------------------------------------

void proper_nouns(const Builder& bld, const std::vector<bool>& taken, std::vector<Candidate>& out) {
  const auto& t = bld.toks();
  std::set<std::string> seen;
  // acronyms, first occurrence
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (taken[i] || !acronym(t[i]) || seen.count(t[i].core)) continue;
    seen.insert(t[i].core);
    auto [ab, ae] = bld.core_span(i, i + 1);
    out.push_back({EvidenceCategory::ProperNounTerm, i, i + 1, ab, ae, GradingRule::ExactNormalized});
  }
  // capitalized runs; n-grams of length 1..4 inside them
  auto capword = [&](std::size_t i) {
    const auto& tk = t[i];
    if (taken[i] || tk.core.empty() || !text::starts_with_upper(tk.core) || acronym(tk)) return false;
    if (cap_stopwords().count(tk.lower) || months().count(tk.lower)) return false;
    return std::any_of(tk.core.begin(), tk.core.end(),
                       [](char c) { return std::islower(static_cast<unsigned char>(c)); });
  };
  struct Occ {
    std::size_t first;
    std::size_t count = 0;
    bool non_initial = false;
  };
  std::map<std::string, Occ> grams;
  std::vector<std::string> order;
  for (const auto& s : bld.sents()) {
    std::size_t i = s.lo;
    while (i < s.hi) {
      if (!capword(i)) {
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < s.hi && capword(j) && !t[j - 1].clause_end && t[j - 1].e == t[j - 1].ce) ++j;
      for (std::size_t a = i; a < j; ++a) {
        for (std::size_t n = 1; n <= 4 && a + n <= j; ++n) {
          std::string key;
          for (std::size_t k = a; k < a + n; ++k) key += (k > a ? " " : "") + t[k].core;
          auto [it, fresh] = grams.try_emplace(key, Occ{a});
          if (fresh) order.push_back(key);
          ++it->second.count;
          if (a != s.lo) it->second.non_initial = true;
        }
      }
      i = j;
    }
  }
  std::vector<std::string> keep;
  for (const auto& k : order) {
    const auto& o = grams[k];
    if (o.count < 2 || !o.non_initial || seen.count(k)) continue;
    keep.push_back(k);
  }
  // drop n-grams subsumed by a longer kept gram with the same count
  for (const auto& k : keep) {
    bool subsumed = false;
    for (const auto& other : keep) {
      if (other.size() > k.size() && other.find(k) != std::string::npos &&
          grams[other].count == grams[k].count) {
        subsumed = true;
        break;
      }
    }
    if (subsumed) continue;
    std::size_t a0 = grams[k].first;
    std::size_t n = static_cast<std::size_t>(std::count(k.begin(), k.end(), ' ')) + 1;
    auto [ab, ae] = bld.core_span(a0, a0 + n);
    out.push_back({EvidenceCategory::ProperNounTerm, a0, a0 + n, ab, ae, GradingRule::ExactNormalized});
    seen.insert(k);
  }
}

// --- DS ---------------------------------------------------------------------

void definitions(const Builder& bld, std::vector<Candidate>& out) {
  const auto& t = bld.toks();
  auto copula = [](const std::string& w) {
    return w == "is" || w == "are" || w == "was" || w == "were";
  };
  for (const auto& s : bld.sents()) {
    for (std::size_t i = s.lo; i + 1 < s.hi; ++i) {
      const std::string& w = t[i].lower;
      const std::string& nx = t[i + 1].lower;
      // "<term> is defined as ..." / "<term>, defined as ..." / "<term> refers to ..."
      std::optional<std::size_t> term_end;
      if ((w == "defined" || w == "described") && nx == "as") {
        if (i > s.lo && copula(t[i - 1].lower))
          term_end = i - 1;
        else if (i > s.lo && t[i - 1].clause_end)
          term_end = i;
      } else if ((w == "refers" || w == "refer") && nx == "to") {
        term_end = i;
      }
      if (term_end) {
        std::size_t e = *term_end;
        std::size_t b = e;
        while (b > s.lo && !t[b - 1].clause_end && e - b < 5) --b;
        while (b < e && determiner(t[b].lower)) ++b;
        if (b >= e) continue;
        if (b > s.lo && !t[b - 1].clause_end && e - b == 5) continue;  // too long to be a term
        auto [ab, ae] = bld.core_span(b, e);
        Candidate c{EvidenceCategory::DefinitionalStatement, b, e, ab, ae, GradingRule::ExactNormalized};
        c.w0 = b;
        c.w1 = std::min(s.hi, b + kMaxAnchorTokens);
        out.push_back(c);
        continue;
      }
      // "... is known as <term>" / "is termed <term>" / "is called <term>"
      std::size_t k = 0;
      if (copula(w) && nx == "known" && i + 2 < s.hi && t[i + 2].lower == "as")
        k = i + 3;
      else if (copula(w) && (nx == "termed" || nx == "called"))
        k = i + 2;
      if (k == 0 || k >= s.hi) continue;
      std::size_t e = k;
      while (e < s.hi && e - k < 4) {
        ++e;
        if (t[e - 1].clause_end || t[e - 1].sentence_end) break;
      }
      std::size_t b = k;
      while (b < e && determiner(t[b].lower)) ++b;
      if (b >= e) continue;
      auto [ab, ae] = bld.core_span(b, e);
      Candidate c{EvidenceCategory::DefinitionalStatement, b, e, ab, ae, GradingRule::ExactNormalized};
      c.w1 = e;
      c.w0 = e > s.lo + kMaxAnchorTokens ? e - kMaxAnchorTokens : s.lo;
      out.push_back(c);
    }
  }
}

// --- CR ---------------------------------------------------------------------

const std::set<std::string>& consequent_stops() {
  static const std::set<std::string> s = {"in", "among", "during", "when", "while", "which", "that",
                                          "with", "by", "after", "because", "and", "but", "for",
                                          "within", "unless", "whereas", "since", "at", "across"};
  return s;
}

void relations(const Builder& bld, std::vector<Candidate>& out) {
  const auto& t = bld.toks();
  static const std::vector<std::vector<std::string>> connectives = {
      {"is", "required", "for"}, {"are", "required", "for"}, {"leads", "to"}, {"led", "to"},
      {"lead", "to"},            {"results", "in"},          {"resulted", "in"}, {"result", "in"},
      {"depends", "on"},         {"depend", "on"},           {"causes"},         {"caused"},
      {"requires"},              {"required"},               {"triggers"},       {"triggered"},
      {"induces"},               {"induced"},                {"prevents"},       {"prevented"},
      {"inhibits"},              {"promotes"}};
  auto take_consequent = [&](std::size_t k, std::size_t hi, std::size_t max_len) {
    while (k < hi && determiner(t[k].lower)) ++k;
    std::size_t e = k;
    while (e < hi && e - k < max_len && !consequent_stops().count(t[e].lower)) {
      ++e;
      if (t[e - 1].clause_end || t[e - 1].sentence_end) break;
    }
    return std::pair<std::size_t, std::size_t>{k, e};
  };
  for (const auto& s : bld.sents()) {
    // If X, (then) Y
    if (t[s.lo].lower == "if") {
      std::size_t p0 = s.lo + 1, p1 = p0;
      while (p1 < s.hi && !t[p1].clause_end) ++p1;
      if (p1 < s.hi && p1 - p0 < 8) {
        std::size_t k = p1 + 1;
        if (k < s.hi && t[k].lower == "then") ++k;
        auto [c0, c1] = take_consequent(k, s.hi, 6);
        if (c1 > c0) {
          auto [ab, ae] = bld.core_span(c0, c1);
          auto [pb, pe] = bld.core_span(p0, p1 + 1);
          Candidate c{EvidenceCategory::ConstraintRelation, c0, c1, ab, ae, GradingRule::ExactNormalized};
          c.premise = bld.bytes(pb, pe);
          c.connective = "if";
          c.w0 = s.lo;
          c.w1 = c1;
          out.push_back(c);
          continue;
        }
      }
    }
    for (std::size_t i = s.lo + 1; i < s.hi; ++i) {
      const std::vector<std::string>* hit = nullptr;
      for (const auto& conn : connectives) {
        if (i + conn.size() > s.hi) continue;
        bool ok = true;
        for (std::size_t k = 0; k < conn.size() && ok; ++k) ok = t[i + k].lower == conn[k];
        if (ok) {
          hit = &conn;
          break;
        }
      }
      if (!hit) continue;
      if (t[i - 1].clause_end) continue;
      std::size_t p1 = i, p0 = i;
      while (p0 > s.lo && !t[p0 - 1].clause_end && p1 - p0 < 4) --p0;
      while (p0 < p1 && determiner(t[p0].lower)) ++p0;
      auto [c0, c1] = take_consequent(i + hit->size(), s.hi, 4);
      if (p0 >= p1 || c1 <= c0) continue;
      if (c1 - p0 > kMaxAnchorTokens) continue;
      auto [ab, ae] = bld.core_span(c0, c1);
      auto [pb, pe] = bld.core_span(p0, p1);
      Candidate c{EvidenceCategory::ConstraintRelation, c0, c1, ab, ae, GradingRule::ExactNormalized};
      c.premise = bld.bytes(pb, pe);
      std::string conn;
      for (std::size_t k = 0; k < hit->size(); ++k) conn += (k ? " " : "") + t[i + k].core;
      c.connective = conn;
      c.w0 = p0;
      c.w1 = c1;
      // widen to the surrounding sentence when it still fits
      std::size_t room = kMaxAnchorTokens - (c1 - p0);
      c.w1 = std::min(s.hi, c.w1 + room / 2);
      c.w0 = std::max(s.lo, c.w0 >= room - (c.w1 - c1) ? c.w0 - (room - (c.w1 - c1)) : s.lo);
      out.push_back(c);
      i = c1 > i ? c1 - 1 : i;
    }
  }
}

}  // namespace

std::vector<EvidenceUnit> RuleBasedExtractor::extract(const Document& doc, std::size_t) const {
  Builder bld(doc);
  std::vector<Candidate> cands;
  std::vector<bool> taken(bld.toks().size(), false);
  metadata_cues(bld, taken, cands);
  precise_details(bld, taken, cands);
  proper_nouns(bld, taken, cands);
  definitions(bld, cands);
  relations(bld, cands);
  std::vector<EvidenceUnit> units;
  for (const auto& c : cands)
    if (auto u = bld.make(c)) units.push_back(std::move(*u));
  std::stable_sort(units.begin(), units.end(), [](const EvidenceUnit& a, const EvidenceUnit& b) {
    return a.char_start < b.char_start;
  });
  return units;
}

std::vector<EvidenceUnit> extract_evidence(const Document& doc, const EvidenceExtractor& extractor,
                                           std::size_t max_units) {
  if (max_units == 0) throw ConfigInvalid("max_units must be >= 1");
  std::vector<EvidenceUnit> valid;
  std::set<std::pair<EvidenceCategory, std::string>> seen;
  if (!doc.text.empty()) {
    for (auto& u : extractor.extract(doc, max_units)) {
      if (!validate_unit(u, doc)) continue;
      auto key = std::make_pair(u.category, normalize(u.canonical_answer, GradingRule::ExactNormalized));
      if (!seen.insert(key).second) continue;
      valid.push_back(std::move(u));
    }
  }
  if (valid.empty()) throw NoEvidenceFound(doc.doc_id);
  std::vector<EvidenceUnit> picked;
  if (valid.size() <= max_units) {
    picked = std::move(valid);
  } else {
    std::array<std::vector<std::size_t>, kEvidenceCategoryCount> by_cat;
    for (std::size_t i = 0; i < valid.size(); ++i)
      by_cat[static_cast<std::size_t>(valid[i].category)].push_back(i);
    std::vector<std::size_t> chosen;
    for (std::size_t round = 0; chosen.size() < max_units; ++round)
      for (const auto& bucket : by_cat)
        if (round < bucket.size() && chosen.size() < max_units) chosen.push_back(bucket[round]);
    std::sort(chosen.begin(), chosen.end());
    for (auto i : chosen) picked.push_back(std::move(valid[i]));
  }
  for (std::size_t i = 0; i < picked.size(); ++i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "#u%02zu", i);
    picked[i].unit_id = doc.doc_id + buf;
  }
  return picked;
}

void to_json(nlohmann::json& j, const EvidenceUnit& u) {
  j = nlohmann::json{{"unit_id", u.unit_id},
                             {"doc_id", u.doc_id},
                             {"category", to_string(u.category)},
                             {"anchor", u.anchor},
                             {"canonical_answer", u.canonical_answer},
                             {"alias_set", u.alias_set},
                             {"grading_rule", to_string(u.grading_rule)},
                             {"char_start", u.char_start},
                             {"char_end", u.char_end}};
  if (!u.connective.empty()) {
    j["premise"] = u.premise;
    j["connective"] = u.connective;
  }
}

void from_json(const nlohmann::json& j, EvidenceUnit& u) {
  u.unit_id = j.value("unit_id", "");
  u.doc_id = j.value("doc_id", "");
  u.category = category_from_string(j.at("category").get<std::string>());
  u.anchor = j.at("anchor").get<std::string>();
  u.canonical_answer = j.at("canonical_answer").get<std::string>();
  u.alias_set = j.value("alias_set", std::vector<std::string>{});
  u.grading_rule = grading_rule_from_string(j.at("grading_rule").get<std::string>());
  u.char_start = j.at("char_start").get<std::size_t>();
  u.char_end = j.at("char_end").get<std::size_t>();
  u.premise = j.value("premise", "");
  u.connective = j.value("connective", "");
}

}  // namespace ragaudit
