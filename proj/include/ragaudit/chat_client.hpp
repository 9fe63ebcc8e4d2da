#pragma once

#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragaudit {

struct HttpEndpoint {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string model;
  std::string api_key;   // taken from the environment, never from config files
  double temperature = 0.0;
  int timeout_s = 60;
  int retries = 2;
  int backoff_ms = 250;  // doubled after every failed attempt
  int max_in_flight = 4;
};

/// Reads an API key from the environment; empty when unset.
std::string api_key_from_env(const char* var);

inline constexpr const char* kTargetKeyEnv = "AUDIT_TARGET_API_KEY";
inline constexpr const char* kGeneratorKeyEnv = "AUDIT_GEN_API_KEY";

/// JSON-over-HTTP POST with bounded concurrency, per-request timeout and
/// retries with exponential backoff on transport errors, 429 and 5xx.
/// Throws TargetUnavailable once retries are exhausted.
class HttpJsonClient {
 public:
  explicit HttpJsonClient(HttpEndpoint endpoint);
  nlohmann::json post(const std::string& path, const nlohmann::json& body) const;
  const HttpEndpoint& endpoint() const { return ep_; }

 private:
  HttpEndpoint ep_;
  std::string origin_;  // scheme://host[:port]
  std::string prefix_;  // path prefix without trailing '/'
  mutable std::unique_ptr<std::counting_semaphore<>> slots_;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages) const = 0;
};

/// POST {model, messages, temperature} to <base>/chat/completions.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(HttpEndpoint endpoint) : http_(std::move(endpoint)) {}
  std::string complete(const std::vector<ChatMessage>& messages) const override;

 private:
  HttpJsonClient http_;
};

/// choices[0].message.content, choices[0].text or a top-level "text" field.
std::string parse_chat_text(const nlohmann::json& response);

}  // namespace ragaudit
