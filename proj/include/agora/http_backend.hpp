#pragma once

#include <chrono>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "agora/error.hpp"
#include "agora/gateway.hpp"

namespace agora {

// Splits "https://host:8000/v1" into ("https://host:8000", "/v1").
inline std::pair<std::string, std::string> split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw PreconditionViolation("endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  auto path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

// OpenAI-compatible client: POST {endpoint_url}/chat/completions.
// The endpoint URL is taken as the full base path (include "/v1" if needed).
class HttpBackend final : public ChatBackend {
 public:
  HttpBackend(std::string endpoint_url, std::string api_key,
              std::chrono::seconds timeout = std::chrono::seconds(300))
      : api_key_(std::move(api_key)), timeout_(timeout) {
    std::tie(origin_, base_path_) = split_endpoint(endpoint_url);
  }

  ChatResponse send(const ChatRequest& req) override {
    httplib::Client cli(origin_);
    cli.set_connection_timeout(std::chrono::seconds(30));
    cli.set_read_timeout(timeout_);
    cli.set_write_timeout(timeout_);
    if (!api_key_.empty()) cli.set_bearer_token_auth(api_key_);

    const auto body = to_wire_json(req).dump();
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(base_path_ + "/chat/completions", body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - start;

    if (!res) throw TransientFailure("transport error: " + httplib::to_string(res.error()), 0);
    const int status = res->status;
    if (status == 401 || status == 403) throw AuthRejected("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
    if (status == 429 || status >= 500) throw TransientFailure("HTTP " + std::to_string(status), status);
    if (status != 200) throw EndpointUnreachable("HTTP " + std::to_string(status) + ": " + res->body.substr(0, 200));

    return parse_completion(res->body, std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
  }

  static ChatResponse parse_completion(const std::string& body, std::int64_t latency_ms) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw MalformedResponse(std::string("response is not JSON: ") + e.what());
    }
    const auto* content = [&]() -> const nlohmann::json* {
      if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) return nullptr;
      const auto& choice = j["choices"][0];
      if (!choice.contains("message") || !choice["message"].contains("content")) return nullptr;
      return &choice["message"]["content"];
    }();
    if (content == nullptr || !content->is_string()) throw MalformedResponse("missing choices[0].message.content");

    ChatResponse out;
    out.text = content->get<std::string>();
    out.latency_ms = latency_ms;
    if (j.contains("usage") && j["usage"].is_object()) {
      out.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
      out.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    return out;
  }

 private:
  std::string origin_;
  std::string base_path_;
  std::string api_key_;
  std::chrono::seconds timeout_;
};

}  // namespace agora
