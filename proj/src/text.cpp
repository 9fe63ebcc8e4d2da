#include "ragaudit/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <stdexcept>

namespace ragaudit::text {

namespace {

icu::UnicodeString to_ustr(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

// Decodes one code point at byte offset i; advances i. Invalid bytes decode
// as U+FFFD and consume one byte.
UChar32 next_cp(std::string_view s, std::size_t& i) {
  UChar32 c;
  int32_t pos = static_cast<int32_t>(i);
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), pos, static_cast<int32_t>(s.size()), c);
  i = static_cast<std::size_t>(pos);
  return c < 0 ? 0xFFFD : c;
}

}  // namespace

std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString out = norm->normalize(to_ustr(s), status);
  if (U_FAILURE(status)) return std::string(s);
  return to_utf8(out);
}

std::string casefold(std::string_view s) {
  icu::UnicodeString u = to_ustr(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return to_utf8(u);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < s.size()) {
    std::size_t at = i;
    UChar32 c = next_cp(s, i);
    if (u_isUWhiteSpace(c)) {
      if (start != std::string_view::npos) {
        out.push_back(s.substr(start, at - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = at;
    }
  }
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

std::size_t count_ws_tokens(std::string_view s) { return split_ws(s).size(); }

std::string_view trim(std::string_view s) {
  std::size_t i = 0;
  std::size_t first = s.size();
  std::size_t last = 0;
  while (i < s.size()) {
    std::size_t at = i;
    UChar32 c = next_cp(s, i);
    if (!u_isUWhiteSpace(c)) {
      if (first == s.size()) first = at;
      last = i;
    }
  }
  if (first == s.size()) return {};
  return s.substr(first, last - first);
}

std::string collapse_ws(std::string_view s) {
  std::string out;
  for (auto piece : split_ws(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(piece);
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string folded = casefold(s);
  std::string_view f = folded;
  std::size_t i = 0;
  std::size_t start = std::string_view::npos;
  while (i < f.size()) {
    std::size_t at = i;
    UChar32 c = next_cp(f, i);
    if (u_isalnum(c)) {
      if (start == std::string_view::npos) start = at;
    } else if (start != std::string_view::npos) {
      out.emplace_back(f.substr(start, at - start));
      start = std::string_view::npos;
    }
  }
  if (start != std::string_view::npos) out.emplace_back(f.substr(start));
  return out;
}

bool is_ascii_punct(char c) {
  static constexpr std::string_view kPunct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  return kPunct.find(c) != std::string_view::npos;
}

std::vector<std::string> answer_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto piece : split_ws(s)) {
    std::size_t b = 0;
    std::size_t e = piece.size();
    // '%' is part of a quantity ("5%"), keep it at the tail.
    while (b < e && is_ascii_punct(piece[b])) ++b;
    while (e > b && is_ascii_punct(piece[e - 1]) && piece[e - 1] != '%') --e;
    if (e > b) out.emplace_back(piece.substr(b, e - b));
  }
  return out;
}

bool starts_with_upper(std::string_view word) {
  if (word.empty()) return false;
  std::size_t i = 0;
  return u_isupper(next_cp(word, i));
}

bool all_caps_token(std::string_view word) {
  int letters = 0;
  std::size_t i = 0;
  while (i < word.size()) {
    UChar32 c = next_cp(word, i);
    if (u_isalpha(c)) {
      if (!u_isupper(c)) return false;
      ++letters;
    }
  }
  return letters >= 2;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

bool contains_token_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace ragaudit::text
