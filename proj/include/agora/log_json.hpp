#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/agents.hpp"
#include "agora/datasets.hpp"
#include "agora/types.hpp"

namespace agora {

using ordered_json = nlohmann::ordered_json;

// Everything logged for one (job, sample) debate or baseline call.
struct DebateRecord {
  ordered_json config = ordered_json::object();  // redacted job snapshot
  std::string run_name;
  int repeat_index = 1;
  bool baseline = false;
  TaskInstance task;
  std::vector<AgentProfile> personas;
  PersonaCallLog persona_generation;
  std::vector<Message> messages;
  DecisionOutcome outcome;
  std::string error;  // non-empty when the debate failed
  std::int64_t global_clock_ms = 0;

  bool failed() const { return !error.empty(); }
};

inline ordered_json to_json(const Message& m) {
  ordered_json j;
  j["seq"] = m.seq;
  j["turn"] = m.turn;
  j["agentId"] = m.agent_id;
  j["phase"] = to_string(m.phase);
  j["text"] = m.text;
  j["agreement"] = m.agreement ? ordered_json(to_string(*m.agreement)) : ordered_json(nullptr);
  j["proposal"] = m.proposal;
  j["clockMs"] = m.wall_clock_ms;
  return j;
}

inline ordered_json to_json(const BallotChoice& c) {
  return std::visit(
      [](const auto& v) -> ordered_json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, PointMap>) {
          ordered_json o = ordered_json::object();
          for (const auto& [i, p] : v) o[std::to_string(i)] = p;
          return o;
        } else {
          return ordered_json(v);
        }
      },
      c);
}

inline ordered_json to_json(const Ballot& b) {
  ordered_json j;
  j["voter"] = b.voter;
  j["rawText"] = b.raw_text;
  j["parsed"] = to_json(b.parsed);
  j["valid"] = b.valid;
  j["failureReason"] = b.failure_reason.empty() ? ordered_json(nullptr) : ordered_json(b.failure_reason);
  j["warning"] = b.warning.empty() ? ordered_json(nullptr) : ordered_json(b.warning);
  j["attempts"] = b.attempts;
  j["messageSeq"] = b.message_seq;
  return j;
}

inline ordered_json to_json(const DecisionOutcome& o, bool baseline = false) {
  ordered_json j;
  j["protocol"] = o.protocol ? ordered_json(to_string(*o.protocol)) : ordered_json(baseline ? "baseline" : nullptr);
  j["finalText"] = o.final_text;
  j["success"] = o.success;
  j["decidedAtTurn"] = o.decided_at_turn;
  j["candidates"] = o.candidates;
  auto ballots = ordered_json::array();
  for (const auto& b : o.ballots) ballots.push_back(to_json(b));
  j["ballots"] = std::move(ballots);
  j["tieBroken"] = o.tie_broken ? ordered_json(to_string(*o.tie_broken)) : ordered_json(nullptr);
  j["fallbackReason"] = o.fallback_reason.empty() ? ordered_json(nullptr) : ordered_json(o.fallback_reason);
  return j;
}

inline ordered_json to_json(const AgentProfile& a) {
  ordered_json j;
  j["agentId"] = a.agent_id;
  j["name"] = a.persona.name;
  j["description"] = a.persona.description;
  if (a.persona.traits) j["traits"] = *a.persona.traits;
  j["responseGenerator"] = to_string(a.response_generator);
  return j;
}

inline ordered_json to_json(const DebateRecord& r) {
  ordered_json j;
  j["config"] = r.config;
  j["run"] = r.run_name;
  j["repeat"] = r.repeat_index;
  j["baseline"] = r.baseline;
  j["task"] = to_json(r.task);
  auto personas = ordered_json::array();
  for (const auto& a : r.personas) personas.push_back(to_json(a));
  j["personas"] = std::move(personas);
  j["personaGeneration"] = r.persona_generation;
  auto messages = ordered_json::array();
  for (const auto& m : r.messages) messages.push_back(to_json(m));
  j["messages"] = std::move(messages);
  j["outcome"] = to_json(r.outcome, r.baseline);
  j["error"] = r.failed() ? ordered_json(r.error) : ordered_json(nullptr);
  j["globalClockMs"] = r.global_clock_ms;
  return j;
}

// One JSON document per line.
inline std::string to_jsonl_line(const DebateRecord& r) { return to_json(r).dump() + "\n"; }

// The subset of a logged record that evaluation needs.
struct RecordSummary {
  std::string run_name;
  int repeat_index = 1;
  std::string sample_id;
  std::string final_text;
  bool success = false;
  bool failed = false;
  int turns = 0;
  double clock_s = 0.0;
};

inline RecordSummary summarize_record(const nlohmann::json& j) {
  RecordSummary s;
  try {
    s.run_name = j.at("run").get<std::string>();
    s.repeat_index = j.value("repeat", 1);
    s.sample_id = j.at("task").at("id").get<std::string>();
    const auto& out = j.at("outcome");
    s.final_text = out.at("finalText").get<std::string>();
    s.success = out.at("success").get<bool>();
    s.turns = out.at("decidedAtTurn").get<int>();
    s.failed = j.contains("error") && !j["error"].is_null();
    s.clock_s = static_cast<double>(j.at("globalClockMs").get<std::int64_t>()) / 1000.0;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed debate record: ") + e.what());
  }
  return s;
}

}  // namespace agora
