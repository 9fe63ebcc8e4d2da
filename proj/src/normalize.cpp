#include "ragaudit/normalize.hpp"

#include <array>
#include <cctype>
#include <functional>
#include <regex>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::string_view to_string(GradingRule rule) {
  switch (rule) {
    case GradingRule::ExactNormalized: return "exact";
    case GradingRule::NumericCanonical: return "numeric";
    case GradingRule::DateCanonical: return "date";
    case GradingRule::OptionSet: return "option_set";
  }
  return "exact";
}

GradingRule grading_rule_from_string(std::string_view s) {
  if (s == "exact" || s == "ExactNormalized") return GradingRule::ExactNormalized;
  if (s == "numeric" || s == "NumericCanonical") return GradingRule::NumericCanonical;
  if (s == "date" || s == "DateCanonical") return GradingRule::DateCanonical;
  if (s == "option_set" || s == "OptionSet") return GradingRule::OptionSet;
  throw UserError("unknown grading rule: " + std::string(s));
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_lower_alpha(char c) { return c >= 'a' && c <= 'z'; }

std::string regex_replace_fn(const std::string& s, const std::regex& re,
                             const std::function<std::string(const std::smatch&)>& fn) {
  std::string out;
  auto begin = std::sregex_iterator(s.begin(), s.end(), re);
  auto end = std::sregex_iterator();
  std::size_t last = 0;
  for (auto it = begin; it != end; ++it) {
    const auto& m = *it;
    out.append(s, last, static_cast<std::size_t>(m.position()) - last);
    out += fn(m);
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(s, last, std::string::npos);
  return out;
}

std::string strip_formatting(std::string s) {
  s = text::replace_all(std::move(s), "“", "\"");
  s = text::replace_all(std::move(s), "”", "\"");
  s = text::replace_all(std::move(s), "‘", "'");
  s = text::replace_all(std::move(s), "’", "'");
  std::string out;
  out.reserve(s.size());
  for (char c : s)
    if (c != '*' && c != '`') out.push_back(c);
  return out;
}

bool matches_thousands(std::string_view run) {
  // \d{1,3}(,\d{3})+(\.\d+)?
  std::size_t i = 0;
  std::size_t lead = 0;
  while (i < run.size() && is_digit(run[i])) ++i, ++lead;
  if (lead < 1 || lead > 3) return false;
  int groups = 0;
  while (i < run.size() && run[i] == ',') {
    if (i + 4 > run.size()) return false;
    for (std::size_t k = 1; k <= 3; ++k)
      if (!is_digit(run[i + k])) return false;
    i += 4;
    ++groups;
  }
  if (groups == 0) return false;
  if (i == run.size()) return true;
  if (run[i] != '.') return false;
  ++i;
  if (i == run.size()) return false;
  while (i < run.size() && is_digit(run[i])) ++i;
  return i == run.size();
}

std::string canonical_number(std::string run) {
  if (matches_thousands(run)) {
    std::string no_commas;
    for (char c : run)
      if (c != ',') no_commas.push_back(c);
    run = no_commas;
  }
  if (run.find(',') != std::string::npos) return run;
  auto dot = run.find('.');
  if (dot == std::string::npos || run.find('.', dot + 1) != std::string::npos) return run;
  if (dot == 0 || dot + 1 >= run.size()) return run;
  while (run.back() == '0') run.pop_back();
  if (run.back() == '.') run.pop_back();
  return run;
}

bool ordinal_suffix(std::string_view s, std::size_t at) {
  static constexpr std::array<std::string_view, 4> kSuffix = {"st", "nd", "rd", "th"};
  for (auto suf : kSuffix) {
    if (s.substr(at, 2) == suf && (at + 2 >= s.size() || !is_lower_alpha(s[at + 2]))) return true;
  }
  return false;
}

bool starts_unit_letter(std::string_view s, std::size_t at) {
  if (at >= s.size()) return false;
  if (is_lower_alpha(s[at])) return true;
  // micro sign / greek mu after case folding
  return s.substr(at, 2) == "μ" || s.substr(at, 2) == "µ";
}

std::string numeric_pass(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    // Digits glued to a word ("et-1", "covid-19", "h2o") are identifiers.
    bool identifier = false;
    if (i > 0) {
      char p = s[i - 1];
      if (is_lower_alpha(p) || p == '_' || static_cast<unsigned char>(p) >= 0x80) identifier = true;
      if (p == '-' && i > 1 && (is_lower_alpha(s[i - 2]) || is_digit(s[i - 2]))) identifier = true;
      if (p == '.' && i > 1 && is_digit(s[i - 2])) identifier = true;
    }
    std::size_t j = i;
    while (j < s.size() && (is_digit(s[j]) || s[j] == '.' || s[j] == ',')) ++j;
    while (j > i && (s[j - 1] == '.' || s[j - 1] == ',')) --j;
    std::string run = s.substr(i, j - i);
    if (identifier) {
      out += run;
      i = j;
      continue;
    }
    out += canonical_number(run);
    i = j;
    if (starts_unit_letter(s, i) && !ordinal_suffix(s, i)) {
      out.push_back(' ');
    } else {
      std::size_t k = i;
      while (k < s.size() && s[k] == ' ') ++k;
      if (k > i && k < s.size() && s[k] == '%') i = k;
    }
  }
  return out;
}

int month_number(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
  for (std::size_t m = 0; m < kMonths.size(); ++m)
    if (name.substr(0, 3) == kMonths[m]) return static_cast<int>(m) + 1;
  return 0;
}

std::string two(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

std::string iso(const std::string& year, int month, int day) {
  std::string out = year + "-" + two(month);
  if (day > 0) out += "-" + two(day);
  return out;
}

const char* kMonthAlt =
    "(jan(?:uary)?|feb(?:ruary)?|mar(?:ch)?|apr(?:il)?|may|june?|july?|aug(?:ust)?|"
    "sep(?:t(?:ember)?)?|oct(?:ober)?|nov(?:ember)?|dec(?:ember)?)";

std::string date_pass(const std::string& s) {
  static const std::regex month_day_year(std::string("\\b") + kMonthAlt +
                                         "\\.?\\s+(\\d{1,2})(?:st|nd|rd|th)?,?\\s+(\\d{4})\\b");
  static const std::regex day_month_year(std::string("\\b(\\d{1,2})(?:st|nd|rd|th)?\\s+(?:of\\s+)?") +
                                         kMonthAlt + "\\.?,?\\s+(\\d{4})\\b");
  static const std::regex slash_date("\\b(\\d{1,2})/(\\d{1,2})/(\\d{4})\\b");
  static const std::regex dash_date("\\b(\\d{4})-(\\d{1,2})-(\\d{1,2})\\b");
  static const std::regex month_year(std::string("\\b") + kMonthAlt + "\\.?,?\\s+(\\d{4})\\b");

  auto valid = [](int m, int d) { return m >= 1 && m <= 12 && d >= 1 && d <= 31; };
  std::string out = regex_replace_fn(s, month_day_year, [&](const std::smatch& m) {
    int mon = month_number(m.str(1));
    int day = std::stoi(m.str(2));
    return valid(mon, day) ? iso(m.str(3), mon, day) : m.str(0);
  });
  out = regex_replace_fn(out, day_month_year, [&](const std::smatch& m) {
    int day = std::stoi(m.str(1));
    int mon = month_number(m.str(2));
    return valid(mon, day) ? iso(m.str(3), mon, day) : m.str(0);
  });
  out = regex_replace_fn(out, slash_date, [&](const std::smatch& m) {
    int mon = std::stoi(m.str(1));
    int day = std::stoi(m.str(2));
    return valid(mon, day) ? iso(m.str(3), mon, day) : m.str(0);
  });
  out = regex_replace_fn(out, dash_date, [&](const std::smatch& m) {
    int mon = std::stoi(m.str(2));
    int day = std::stoi(m.str(3));
    return valid(mon, day) ? iso(m.str(1), mon, day) : m.str(0);
  });
  out = regex_replace_fn(out, month_year, [&](const std::smatch& m) {
    return iso(m.str(2), month_number(m.str(1)), 0);
  });
  return out;
}

std::string strip_tail(std::string s) {
  static constexpr std::string_view kTail = ".,;:!?";
  for (;;) {
    std::string t(text::trim(s));
    while (!t.empty() && kTail.find(t.back()) != std::string_view::npos) t.pop_back();
    if (t == s) return s;
    s = std::move(t);
  }
}

std::string normalize_once(std::string_view input, GradingRule rule) {
  std::string s = text::nfc(text::casefold(text::nfc(input)));
  s = strip_formatting(std::move(s));
  s = text::collapse_ws(s);
  if (rule == GradingRule::NumericCanonical) s = numeric_pass(s);
  if (rule == GradingRule::DateCanonical) s = date_pass(s);
  return strip_tail(text::collapse_ws(s));
}

}  // namespace

std::string normalize(std::string_view text, GradingRule rule) {
  std::string cur = normalize_once(text, rule);
  for (int i = 0; i < 6; ++i) {
    std::string next = normalize_once(cur, rule);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

namespace {

const std::string kLetterList =
    "([A-E](?![A-Za-z0-9])(?:\\s*(?:,|and|&|/|\\+|or)\\s*[A-E](?![A-Za-z0-9]))*)";

void collect(const std::string& s, const std::regex& re, int group, LetterSet& out) {
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    for (char c : (*it)[group].str())
      if (c >= 'A' && c <= 'E') out.insert(c);
  }
}

LetterSet intersect(const LetterSet& found, const LetterSet& allowed) {
  LetterSet out;
  for (char c : found)
    if (allowed.count(c)) out.insert(c);
  return out;
}

}  // namespace

LetterSet extract_letters(std::string_view raw, const LetterSet& allowed) {
  static const std::regex bracketed("[\\(\\[]\\s*([A-E])\\s*[\\)\\]]");
  static const std::regex cue_before(
      "\\b(?:[Aa]nswers?|[Oo]ptions?|[Cc]hoices?|[Ll]etters?)"
      "(?:\\s+(?:is|are|would be|will be|should be))?\\s*[:=\\-]?\\s*"
      "(?:(?:[Oo]ptions?|[Cc]hoices?)\\s+)?" +
      kLetterList);
  static const std::regex cue_verb(
      "\\b(?:[Ii] (?:would |'d |will )?(?:choose|select|pick|go with)|[Cc]hoose|[Ss]elect|[Pp]ick)\\s+" +
      kLetterList);
  static const std::regex cue_after("(?:^|[^A-Za-z0-9])" + kLetterList +
                                    "\\s+(?:is|are)\\s+(?:the\\s+)?(?:correct|right|true)\\b");
  static const std::regex letters_only(
      "^\\s*\\(?([A-E])\\)?(?:\\s*(?:,|and|&|/|\\+)?\\s*\\(?[A-E]\\)?)*\\s*[.!]?\\s*$");
  static const std::regex line_leading("(?:^|\\n)\\s*([A-E])[\\.\\):]\\s");

  std::string s = strip_formatting(text::nfc(raw));

  LetterSet tier1;
  collect(s, bracketed, 1, tier1);
  if (auto hit = intersect(tier1, allowed); !hit.empty()) return hit;

  LetterSet tier2;
  collect(s, cue_before, 1, tier2);
  collect(s, cue_verb, 1, tier2);
  collect(s, cue_after, 1, tier2);
  if (auto hit = intersect(tier2, allowed); !hit.empty()) return hit;

  // Letter-only sentences, or a letter list closing a sentence after a comma
  // or colon ("Based on the context, B").
  static const std::regex letters_tail(
      "(?:^|[,:]\\s+)(\\(?[A-E]\\)?(?:\\s*(?:,|and|&|/|\\+)?\\s*\\(?[A-E]\\)?)*)\\s*[.!]?\\s*$");
  static const std::regex boundary("\\n|[.!?;:](?=\\s)");
  LetterSet tier3;
  auto take_letters = [&](const std::string& span) {
    for (char c : span)
      if (c >= 'A' && c <= 'E') tier3.insert(c);
  };
  for (std::sregex_token_iterator it(s.begin(), s.end(), boundary, -1), end; it != end; ++it) {
    std::string seg(text::trim(it->str()));
    if (seg.empty()) continue;
    std::smatch m;
    if (std::regex_match(seg, m, letters_only)) take_letters(seg);
    else if (std::regex_search(seg, m, letters_tail)) take_letters(m[1].str());
  }
  collect(s, line_leading, 1, tier3);
  return intersect(tier3, allowed);
}

std::optional<bool> extract_truth(std::string_view raw) {
  std::string s = normalize(raw, GradingRule::ExactNormalized);
  if (s == "true" || s == "t" || s == "yes" || s == "correct") return true;
  if (s == "false" || s == "f" || s == "no" || s == "incorrect") return false;

  // Clause by clause: a lone "t"/"f" or a clause-leading "no" only counts
  // as an answer when it stands apart ("Sure. T", "No, it was 412").
  static const std::regex boundary("\\n|[.!?;:,](?=\\s|$)");
  bool saw_true = false;
  bool saw_false = false;
  std::string r(raw);
  for (std::sregex_token_iterator it(r.begin(), r.end(), boundary, -1), end; it != end; ++it) {
    auto tokens = text::answer_tokens(normalize(it->str(), GradingRule::ExactNormalized));
    if (tokens.size() == 1 && (tokens[0] == "t" || tokens[0] == "f")) {
      (tokens[0] == "t" ? saw_true : saw_false) = true;
      continue;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto& t = tokens[i];
      std::optional<bool> pol;
      if (t == "true" || t == "yes" || t == "correct") pol = true;
      if (t == "false" || t == "incorrect" || t == "untrue" || t == "wrong") pol = false;
      if (i == 0 && t == "no") pol = false;
      if (!pol) continue;
      if (i > 0 && (tokens[i - 1] == "not" || tokens[i - 1] == "isn't" || tokens[i - 1] == "never"))
        pol = !*pol;
      (*pol ? saw_true : saw_false) = true;
    }
  }
  if (saw_true == saw_false) return std::nullopt;
  return saw_true;
}

bool looks_like_refusal(std::string_view raw) {
  static constexpr std::array<std::string_view, 14> kPhrases = {
      "i cannot",        "i can't",         "i can not",          "i'm unable",
      "i am unable",     "i won't",         "i will not",         "i'm not able to",
      "i am not able to", "cannot assist",  "cannot help with",   "i must decline",
      "unable to answer", "i'm sorry, but i"};
  std::string s = normalize(raw, GradingRule::ExactNormalized);
  for (auto p : kPhrases)
    if (s.find(p) != std::string::npos) return true;
  return false;
}

}  // namespace ragaudit
