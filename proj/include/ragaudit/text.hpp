#pragma once

#include <string>
#include <string_view>
#include <vector>

// Unicode-aware string helpers shared by corpus ingest, grading and retrieval.
// All strings are UTF-8.
namespace ragaudit::text {

std::string nfc(std::string_view s);
std::string casefold(std::string_view s);

/// Splits on Unicode whitespace (White_Space property); empty pieces dropped.
std::vector<std::string_view> split_ws(std::string_view s);
std::size_t count_ws_tokens(std::string_view s);

/// Trims Unicode whitespace from both ends.
std::string_view trim(std::string_view s);

/// Trims and collapses every internal whitespace run to a single ASCII space.
std::string collapse_ws(std::string_view s);

/// Lower-cased alphanumeric runs, the tokenization used by lexical retrieval
/// and BLEU. "ET-1 was" -> {"et", "1", "was"}.
std::vector<std::string> word_tokens(std::string_view s);

/// Whitespace tokens with leading/trailing ASCII punctuation removed; internal
/// punctuation ("0.5", "ET-1") is kept. Empty results are dropped.
std::vector<std::string> answer_tokens(std::string_view s);

bool is_ascii_punct(char c);
bool starts_with_upper(std::string_view word);
bool all_caps_token(std::string_view word);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string replace_all(std::string s, std::string_view from, std::string_view to);

/// True when `needle` occurs in `hay` as a contiguous token run.
bool contains_token_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle);

}  // namespace ragaudit::text
