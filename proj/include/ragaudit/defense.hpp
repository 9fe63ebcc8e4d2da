#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ragaudit {

/// Deterministic surface paraphrase: synonym substitution from a bundled table
/// plus fronted-clause reordering ("If X, Y." -> "Y if X."). Digits, option
/// letters A-E, blank markers and true/false vocabulary are never altered.
std::string rewrite_query(std::string_view query, std::uint64_t seed);
std::string rewrite_response(std::string_view text, std::uint64_t seed);

struct GuardrailPattern {
  std::string name;
  std::string regex;  // ECMAScript, matched case-insensitively; empty = length rule only
  double weight = 0.0;
  std::size_t min_tokens = 0;  // with an empty regex: matches texts of at least this many tokens
};

/// Weighted pattern classifier: Block when the summed weight of matching
/// patterns reaches `threshold`.
struct GuardrailPolicy {
  std::string version = "guard-v1";
  std::vector<GuardrailPattern> patterns;
  double threshold = 0.5;
  std::string refusal_message = "I'm sorry, but I can't help with that request.";

  /// Verbatim-reproduction requests, masked-completion scaffolds,
  /// confirmation probes and instruction-override attempts.
  static GuardrailPolicy bundled();
};

enum class GuardrailVerdict { Pass, Block };

double guardrail_score(std::string_view text, const GuardrailPolicy& policy);
GuardrailVerdict guardrail_check(std::string_view text, const GuardrailPolicy& policy);

struct DefenseConfig {
  bool query_rewrite = false;
  bool response_rewrite = false;
  std::optional<GuardrailPolicy> guardrail;
};

struct GuardrailStats {
  std::atomic<std::size_t> passed{0};
  std::atomic<std::size_t> blocked{0};

  double pass_rate() const {
    std::size_t p = passed.load(), b = blocked.load();
    return p + b == 0 ? 1.0 : static_cast<double>(p) / static_cast<double>(p + b);
  }
};

}  // namespace ragaudit
