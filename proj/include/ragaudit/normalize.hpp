#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace ragaudit {

enum class GradingRule { ExactNormalized, NumericCanonical, DateCanonical, OptionSet };

std::string_view to_string(GradingRule rule);
GradingRule grading_rule_from_string(std::string_view s);

using LetterSet = std::set<char>;

/// Canonical form used for every answer comparison.
///
/// Common steps: NFC, case folding, removal of markdown emphasis, whitespace
/// collapse, trailing punctuation strip. NumericCanonical also drops
/// thousands separators, trailing decimal zeros and canonicalizes unit
/// spacing ("120mg" -> "120 mg", "5 %" -> "5%"). DateCanonical rewrites
/// recognized dates to ISO-8601 ("March 5, 1988" -> "1988-03-05",
/// "March 1988" -> "1988-03"). Idempotent for every input.
std::string normalize(std::string_view text, GradingRule rule);

/// Option letters found in a free-text response, intersected with `allowed`.
///
/// Tiers, highest first; the first tier with any match wins and matches
/// within a tier are unioned:
///   1. bracketed letters: "(B)", "[B]"
///   2. answer cues: "answer is B", "option B", "options are A and C",
///      "B is correct", "I choose D"
///   3. letter-only responses ("A and C", "B.") and line-leading "B. ..." forms
/// A bare capital letter without cue context ("A CAT sat") never matches.
LetterSet extract_letters(std::string_view text, const LetterSet& allowed);

/// True/False reading of a response. yes/true/correct/t map to true,
/// no/false/incorrect/f to false; "not true" reads as false. Returns nullopt
/// when no polarity or conflicting polarities are found.
std::optional<bool> extract_truth(std::string_view text);

/// Version tag of the refusal phrase list below.
inline constexpr std::string_view kRefusalListVersion = "refusal-v1";

/// Response reads as a refusal ("I cannot", "I'm unable", ...).
bool looks_like_refusal(std::string_view text);

}  // namespace ragaudit
