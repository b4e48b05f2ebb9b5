#pragma once

#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/error.hpp"
#include "agora/gateway.hpp"

namespace agora {

// Substring predicate over the request's messages. With a role, only messages
// of that role are searched; `negate` inverts the result.
struct ScriptPredicate {
  std::optional<Role> role;
  std::string contains;
  bool negate = false;

  bool holds(const ChatRequest& req) const {
    bool found = false;
    for (const auto& m : req.messages) {
      if (role && m.role != *role) continue;
      if (m.content.find(contains) != std::string::npos) {
        found = true;
        break;
      }
    }
    return found != negate;
  }
};

struct ScriptRule {
  std::vector<ScriptPredicate> when;  // all must hold; empty = always
  std::vector<std::string> responses;
  bool repeatable = false;  // cycles through responses forever
  std::int64_t latency_ms = 0;
  std::size_t used = 0;

  bool exhausted() const { return !repeatable && used >= responses.size(); }
  bool matches(const ChatRequest& req) const {
    for (const auto& p : when)
      if (!p.holds(req)) return false;
    return true;
  }
};

struct Script {
  std::vector<ScriptRule> rules;
};

// First non-exhausted rule whose predicates all hold consumes one response.
inline ChatResponse scripted_match(Script& script, const ChatRequest& req) {
  if (script.rules.empty()) throw PreconditionViolation("empty script");
  for (auto& rule : script.rules) {
    if (rule.exhausted() || !rule.matches(req)) continue;
    if (rule.responses.empty()) throw PreconditionViolation("script rule without responses");
    const auto& text = rule.responses[rule.used % rule.responses.size()];
    ++rule.used;
    ChatResponse resp;
    resp.text = text;
    resp.latency_ms = rule.latency_ms;
    std::istringstream words(text);
    for (std::string w; words >> w;) ++resp.completion_tokens;
    return resp;
  }
  const auto& user = req.content(Role::User);
  throw NoRuleMatched("no script rule matched request (user prompt starts: \"" + user.substr(0, 80) + "\")");
}

// Script file format:
//   {"rules": [{"when": [{"role": "user", "contains": "...", "negate": false}],
//               "response": "..." | "responses": ["...", ...],
//               "repeat": false, "latencyMs": 0}, ...]}
// `"always": true` or an absent/empty `when` matches every request.
inline Script script_from_json(const nlohmann::json& j) {
  Script script;
  if (!j.contains("rules") || !j["rules"].is_array()) throw FormatError("script needs a 'rules' array");
  for (const auto& r : j["rules"]) {
    ScriptRule rule;
    if (r.contains("when")) {
      for (const auto& p : r["when"]) {
        ScriptPredicate pred;
        if (p.contains("role")) {
          const auto role = p["role"].get<std::string>();
          if (role == "system") pred.role = Role::System;
          else if (role == "user") pred.role = Role::User;
          else if (role == "assistant") pred.role = Role::Assistant;
          else if (role != "any") throw FormatError("unknown role in script: " + role);
        }
        pred.contains = p.value("contains", "");
        pred.negate = p.value("negate", false);
        rule.when.push_back(std::move(pred));
      }
    }
    if (r.contains("response")) rule.responses.push_back(r["response"].get<std::string>());
    if (r.contains("responses")) {
      for (const auto& s : r["responses"]) rule.responses.push_back(s.get<std::string>());
    }
    if (rule.responses.empty()) throw FormatError("script rule without response(s)");
    rule.repeatable = r.value("repeat", false);
    rule.latency_ms = r.value("latencyMs", std::int64_t{0});
    script.rules.push_back(std::move(rule));
  }
  if (script.rules.empty()) throw FormatError("script has no rules");
  return script;
}

inline Script load_script(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open script " + path);
  try {
    return script_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("script " + path + ": " + e.what());
  }
}

// Deterministic backend for tests and dry runs. Each instance owns its own
// copy of the script.
class ScriptedBackend final : public ChatBackend {
 public:
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  ChatResponse send(const ChatRequest& req) override {
    std::lock_guard lock(mu_);
    return scripted_match(script_, req);
  }

 private:
  std::mutex mu_;
  Script script_;
};

}  // namespace agora
