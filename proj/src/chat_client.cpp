#include "ragaudit/chat_client.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "ragaudit/errors.hpp"

namespace ragaudit {

std::string api_key_from_env(const char* var) {
  const char* v = std::getenv(var);
  return v ? std::string(v) : std::string();
}

HttpJsonClient::HttpJsonClient(HttpEndpoint endpoint) : ep_(std::move(endpoint)) {
  const std::string& url = ep_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigInvalid("endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  if (ep_.max_in_flight < 1) throw ConfigInvalid("max_in_flight must be >= 1");
  slots_ = std::make_unique<std::counting_semaphore<>>(ep_.max_in_flight);
}

nlohmann::json HttpJsonClient::post(const std::string& path, const nlohmann::json& body) const {
  struct Slot {
    std::counting_semaphore<>& s;
    explicit Slot(std::counting_semaphore<>& sem) : s(sem) { s.acquire(); }
    ~Slot() { s.release(); }
  } slot(*slots_);

  httplib::Headers headers;
  if (!ep_.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep_.api_key);
  const std::string payload = body.dump();
  std::string last_error;
  int delay = ep_.backoff_ms;
  for (int attempt = 0; attempt <= ep_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      delay *= 2;
    }
    httplib::Client cli(origin_);
    cli.set_connection_timeout(ep_.timeout_s, 0);
    cli.set_read_timeout(ep_.timeout_s, 0);
    cli.set_write_timeout(ep_.timeout_s, 0);
    auto res = cli.Post(prefix_ + path, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) throw TargetUnavailable("HTTP " + std::to_string(res->status) + " from " + origin_);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw TargetUnavailable(std::string("unparseable response body: ") + e.what());
    }
  }
  throw TargetUnavailable("request to " + origin_ + prefix_ + path + " failed after " +
                          std::to_string(ep_.retries + 1) + " attempts: " + last_error);
}

std::string parse_chat_text(const nlohmann::json& r) {
  if (r.contains("choices") && r["choices"].is_array() && !r["choices"].empty()) {
    const auto& c = r["choices"][0];
    if (c.contains("message") && c["message"].contains("content") && c["message"]["content"].is_string())
      return c["message"]["content"].get<std::string>();
    if (c.contains("text") && c["text"].is_string()) return c["text"].get<std::string>();
  }
  if (r.contains("text") && r["text"].is_string()) return r["text"].get<std::string>();
  throw TargetUnavailable("chat response has no text field");
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages) const {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  nlohmann::json body{{"model", http_.endpoint().model},
                      {"messages", msgs},
                      {"temperature", http_.endpoint().temperature}};
  return parse_chat_text(http_.post("/chat/completions", body));
}

}  // namespace ragaudit
