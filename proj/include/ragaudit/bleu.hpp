#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ragaudit {

/// Sentence BLEU-4 with uniform weights. Unigram precision is unsmoothed (no
/// shared word gives 0); 2- to 4-gram precisions use add-one smoothing,
/// (matches + 1) / (total + 1). Brevity penalty exp(1 - r/c) when c < r.
double bleu4(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

/// bleu4 over text::word_tokens of both strings.
double bleu4(std::string_view candidate, std::string_view reference);

}  // namespace ragaudit
