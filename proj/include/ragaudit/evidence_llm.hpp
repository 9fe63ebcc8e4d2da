#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ragaudit/chat_client.hpp"
#include "ragaudit/evidence.hpp"

namespace ragaudit {

/// Asks a chat model for evidence units as a JSON array of
/// {category, anchor, answer, rule}. Units whose anchor is not a verbatim
/// span of the document, or whose answer is not inside the anchor, are dropped.
class LlmExtractor final : public EvidenceExtractor {
 public:
  explicit LlmExtractor(std::shared_ptr<const ChatClient> client) : client_(std::move(client)) {}
  std::string name() const override { return "llm"; }
  std::vector<EvidenceUnit> extract(const Document& doc, std::size_t max_units) const override;

  static std::string build_prompt(const Document& doc, std::size_t max_units);
  /// Parses the model reply (tolerates prose or code fences around the array).
  static std::vector<EvidenceUnit> parse_reply(std::string_view reply, const Document& doc);

 private:
  std::shared_ptr<const ChatClient> client_;
};

}  // namespace ragaudit
