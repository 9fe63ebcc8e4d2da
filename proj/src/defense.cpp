#include "ragaudit/defense.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <unordered_map>

#include "ragaudit/rng.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

namespace {

using SynonymTable = std::map<std::string, std::vector<std::string>>;

const SynonymTable& query_synonyms() {
  static const SynonymTable t = {
      {"fill", {"complete"}},
      {"following", {"next", "given"}},
      {"statement", {"sentence", "claim"}},
      {"statements", {"sentences", "claims"}},
      {"option", {"choice"}},
      {"options", {"choices"}},
      {"reply", {"respond", "answer"}},
      {"missing", {"absent", "omitted"}},
      {"accurate", {"right", "valid"}},
      {"which", {"what"}},
      {"blank", {"gap"}},
      {"blanks", {"gaps"}},
      {"text", {"wording"}},
      {"only", {"alone"}},
      {"letter", {"label"}},
      {"letters", {"labels"}},
      {"both", {"the two"}},
      {"below", {"beneath"}},
      {"increased", {"rose"}},
      {"decreased", {"fell"}},
      {"reported", {"described"}},
      {"observed", {"seen"}},
      {"showed", {"demonstrated"}},
      {"study", {"trial"}},
      {"received", {"were given"}},
      {"measured", {"assessed"}},
      {"approximately", {"about"}},
      {"participants", {"subjects"}},
  };
  return t;
}

const SynonymTable& response_synonyms() {
  static const SynonymTable t = {
      {"answer", {"response", "solution"}},
      {"missing", {"absent"}},
      {"text", {"wording"}},
      {"believe", {"think"}},
      {"would", {"will"}},
      {"statement", {"claim"}},
      {"based", {"drawing"}},
      {"passage", {"source", "material"}},
      {"options", {"choices"}},
      {"option", {"choice"}},
      {"that", {"this"}},
      {"it", {"this"}},
      {"otherwise", {"differently"}},
      {"accurate", {"right"}},
      {"matches", {"fits"}},
  };
  return t;
}

const std::set<std::string>& protected_words() {
  static const std::set<std::string> s = {"true", "false", "yes", "no", "not", "correct", "incorrect",
                                          "t", "f", "and", "or", "is", "are", "untrue", "wrong",
                                          "choose", "select", "pick", "never", "isn't"};
  return s;
}

bool is_protected(std::string_view core) {
  if (core.empty()) return true;
  for (char c : core)
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '_') return true;
  if (core.size() == 1 && core[0] >= 'A' && core[0] <= 'E') return true;
  // anything non-ASCII or mixed-case is left alone (names, acronyms)
  bool lower = std::all_of(core.begin(), core.end(), [](char c) {
    return std::islower(static_cast<unsigned char>(c)) || c == '\'' || c == '-';
  });
  bool capitalized = std::isupper(static_cast<unsigned char>(core[0])) &&
                     std::all_of(core.begin() + 1, core.end(),
                                 [](char c) { return std::islower(static_cast<unsigned char>(c)); });
  if (!lower && !capitalized) return true;
  std::string low(core);
  for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return protected_words().count(low) != 0;
}

std::string swap_words(std::string_view line, const SynonymTable& table, Rng& rng) {
  std::string out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ') {
      out += ' ';
      ++i;
      continue;
    }
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    std::string_view tok = line.substr(i, j - i);
    std::size_t b = 0, e = tok.size();
    while (b < e && text::is_ascii_punct(tok[b])) ++b;
    while (e > b && text::is_ascii_punct(tok[e - 1])) --e;
    std::string_view core = tok.substr(b, e - b);
    std::string replacement(core);
    if (!is_protected(core)) {
      std::string low(core);
      for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      auto it = table.find(low);
      if (it != table.end() && rng.bernoulli(0.7)) {
        replacement = it->second[rng.below(it->second.size())];
        if (std::isupper(static_cast<unsigned char>(core[0])))
          replacement[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
      }
    }
    out += tok.substr(0, b);
    out += replacement;
    out += tok.substr(e);
    i = j;
  }
  return out;
}

// "If X, Y." -> "Y if X." for lines opening with a subordinate clause.
std::string reorder_clause(const std::string& line) {
  static const std::regex re(R"(^(If|When|Although|Because|After|Before|While|Once) ([^,]+), ([^,]+?)([.?!]?)$)");
  std::smatch m;
  if (!std::regex_match(line, m, re)) return line;
  std::string cond = m[2].str();
  std::string main = m[3].str();
  // a comma between digits belongs to a number or date, not a clause break
  if (!cond.empty() && std::isdigit(static_cast<unsigned char>(cond.back())) && !main.empty() &&
      std::isdigit(static_cast<unsigned char>(main.front())))
    return line;
  if (main.empty() || main.find(std::string(4, '_')) != std::string::npos) return line;
  std::string head = m[1].str();
  head[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(head[0])));
  bool keep_case = main.size() > 1 && std::isupper(static_cast<unsigned char>(main[1]));
  if (!keep_case) main[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(main[0])));
  return main + " " + head + " " + cond + m[4].str();
}

std::string rewrite(std::string_view s, std::uint64_t seed, const SynonymTable& table) {
  Rng rng(seed);
  std::string out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    std::string line = swap_words(s.substr(pos, nl - pos), table, rng);
    // only prose lines are reordered; lettered options keep their shape
    static const std::regex option_line(R"(^\s*[A-E][.)] )");
    if (!std::regex_search(line, option_line) && rng.bernoulli(0.5)) line = reorder_clause(line);
    out += line;
    if (nl < s.size()) out += '\n';
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::string rewrite_query(std::string_view query, std::uint64_t seed) {
  if (query.empty()) return {};
  return rewrite(query, derive_seed(seed, "query-rewrite"), query_synonyms());
}

std::string rewrite_response(std::string_view text, std::uint64_t seed) {
  if (text.empty()) return {};
  return rewrite(text, derive_seed(seed, "response-rewrite"), response_synonyms());
}

GuardrailPolicy GuardrailPolicy::bundled() {
  GuardrailPolicy p;
  p.patterns = {
      {"mask-placeholder", R"(\[\s*mask(_?\d+)?\s*\]|<mask>|\[blank_?\d+\])", 0.35},
      {"fill-masks", R"(fill in (the|each|all)?\s*(\[?mask|masked|placeholder|numbered))", 0.3},
      {"recover-original", R"(original (words?|tokens?|text)|hidden (words?|content))", 0.2},
      {"verbatim", R"(verbatim|word for word|word-for-word|exact wording|reproduce)", 0.5},
      {"continue-passage", R"(continue (the|this) (text|passage|document)|complete the (rest|remainder))", 0.5},
      {"confirmation-probe",
       R"(knowledge base|in your (database|context|documents)|do you have access|have you seen|were you given)",
       0.6},
      {"override", R"(ignore (all |any )?(previous|prior) instructions|system prompt)", 0.8},
      {"long-passage", "", 0.1, 120},
  };
  return p;
}

namespace {

const std::regex& compiled(const std::string& pattern) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::regex> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(pattern);
  if (it == cache.end())
    it = cache.emplace(pattern, std::regex(pattern, std::regex::icase | std::regex::ECMAScript)).first;
  return it->second;
}

}  // namespace

double guardrail_score(std::string_view text, const GuardrailPolicy& policy) {
  if (text.empty()) return 0.0;
  std::string s(text);
  double score = 0.0;
  std::size_t n_tokens = text::count_ws_tokens(text);
  for (const auto& p : policy.patterns) {
    bool hit = p.regex.empty() ? (p.min_tokens > 0 && n_tokens >= p.min_tokens)
                               : std::regex_search(s, compiled(p.regex));
    if (hit) score += p.weight;
  }
  return score;
}

GuardrailVerdict guardrail_check(std::string_view text, const GuardrailPolicy& policy) {
  return guardrail_score(text, policy) >= policy.threshold ? GuardrailVerdict::Block : GuardrailVerdict::Pass;
}

}  // namespace ragaudit
