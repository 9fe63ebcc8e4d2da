#include "ragaudit/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ragaudit/text.hpp"

namespace ragaudit {

namespace {

std::map<std::vector<std::string>, int> ngrams(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, int> out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++out[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                   toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

}  // namespace

double bleu4(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    auto c = ngrams(cand, n);
    auto r = ngrams(ref, n);
    double matches = 0, total = 0;
    for (const auto& [g, k] : c) {
      total += k;
      auto it = r.find(g);
      if (it != r.end()) matches += std::min(k, it->second);
    }
    double p;
    if (n == 1) {
      if (matches == 0) return 0.0;
      p = matches / total;
    } else {
      p = (matches + 1.0) / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  double c = static_cast<double>(cand.size()), r = static_cast<double>(ref.size());
  double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / 4.0);
}

double bleu4(std::string_view candidate, std::string_view reference) {
  return bleu4(text::word_tokens(candidate), text::word_tokens(reference));
}

}  // namespace ragaudit
