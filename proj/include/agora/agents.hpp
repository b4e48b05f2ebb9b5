#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/debate_state.hpp"
#include "agora/error.hpp"
#include "agora/gateway.hpp"
#include "agora/instructions.hpp"
#include "agora/json_extract.hpp"
#include "agora/prompts.hpp"
#include "agora/types.hpp"

namespace agora {

// Model and sampling parameters used for every call an agent makes.
struct LlmSettings {
  std::string model_name;
  SamplingParams sampling;
};

// ---------------------------------------------------------------------------
// Task text helpers

inline std::string task_instruction(const TaskInstance& task) { return instruction_for(task.instruction_key).text; }
inline std::string task_input(const TaskInstance& task) { return join(task.input_lines, "\n"); }
inline std::string task_context(const TaskInstance& task) { return join(task.context_lines, "\n"); }

inline std::string persona_description_for_prompt(const TaskInstance& task) {
  return task_instruction(task) + " " + join(task.input_lines, " ");
}

// ---------------------------------------------------------------------------
// Persona generation

inline std::vector<Persona> neutral_panel(int n) {
  if (n < 1) throw PreconditionViolation("panel size must be >= 1");
  std::vector<Persona> out;
  for (int i = 1; i <= n; ++i) out.push_back({"Participant " + std::to_string(i), "", std::nullopt});
  return out;
}

inline const std::vector<std::string>& big_five_traits() {
  static const std::vector<std::string> traits{"Extraversion", "Agreeableness", "Conscientiousness", "Neuroticism",
                                               "Openness"};
  return traits;
}

// Allowed options per trait. Defaults are a five-point scale chosen for this
// project; override through configuration.
struct IpipOptions {
  std::vector<std::pair<std::string, std::vector<std::string>>> traits;

  static IpipOptions defaults() {
    IpipOptions o;
    for (const auto& t : big_five_traits()) o.traits.push_back({t, {"very low", "low", "average", "high", "very high"}});
    return o;
  }

  std::string render() const {
    nlohmann::ordered_json j;
    for (const auto& [trait, options] : traits) j[trait] = options;
    return j.dump(2);
  }
};

struct PersonaGenerationOptions {
  int max_attempts = 3;
  IpipOptions ipip = IpipOptions::defaults();
};

// Raw output of every persona-generation call, in call order.
using PersonaCallLog = std::vector<std::string>;

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::string existing_personas_text(const std::vector<Persona>& existing) {
  std::vector<std::string> lines;
  for (const auto& p : existing) {
    nlohmann::ordered_json j;
    j["role"] = p.name;
    if (p.traits) j["traits"] = *p.traits;
    else j["description"] = p.description;
    lines.push_back(j.dump());
  }
  return join(lines, "\n");
}

enum class PersonaFailure { None, Parse, Duplicate, OutOfRange };

// Runs the prompt up to `max_attempts` times; `accept` classifies each output.
inline Persona generate_with_retries(const Gateway& gateway, const ChatRequest& request, int max_attempts,
                                     PersonaCallLog* log,
                                     const std::function<PersonaFailure(const std::string&, Persona&)>& accept) {
  PersonaFailure last = PersonaFailure::None;
  std::string last_raw;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const auto resp = gateway.complete(request);
    if (log) log->push_back(resp.text);
    Persona persona;
    last = accept(resp.text, persona);
    last_raw = resp.text;
    if (last == PersonaFailure::None) return persona;
  }
  const auto tail = " after " + std::to_string(max_attempts) + " attempts; last output: " + last_raw.substr(0, 120);
  switch (last) {
    case PersonaFailure::Duplicate: throw PersonaUniquenessFailure("duplicate persona" + tail);
    case PersonaFailure::OutOfRange: throw TraitOutOfRange("trait option outside the allowed set" + tail);
    default: throw PersonaParseFailure("unparseable persona" + tail);
  }
}

}  // namespace detail

inline ChatRequest expert_persona_request(const std::string& task_description, const std::vector<Persona>& existing,
                                          const LlmSettings& llm) {
  const auto system = render_prompt("persona_expert_system", {{"example_1", std::string(prompt_text("persona_expert_example_1"))},
                                                              {"example_2", std::string(prompt_text("persona_expert_example_2"))},
                                                              {"example_3", std::string(prompt_text("persona_expert_example_3"))}});
  const auto user = render_prompt("persona_expert_user",
                                  {{"task", task_description}, {"existing", detail::existing_personas_text(existing)}});
  return ChatRequest::make(llm.model_name, system, user, llm.sampling);
}

inline Persona generate_expert_persona(const std::string& task_description, const std::vector<Persona>& existing,
                                       const Gateway& gateway, const LlmSettings& llm,
                                       const PersonaGenerationOptions& options = {}, PersonaCallLog* log = nullptr) {
  const auto request = expert_persona_request(task_description, existing, llm);
  return detail::generate_with_retries(gateway, request, options.max_attempts, log,
                                       [&](const std::string& raw, Persona& out) {
    const auto j = extract_first_json_object(raw);
    if (!j || !j->contains("role") || !(*j)["role"].is_string() || !j->contains("description") ||
        !(*j)["description"].is_string())
      return detail::PersonaFailure::Parse;
    out.name = detail::trim((*j)["role"].get<std::string>());
    out.description = detail::trim((*j)["description"].get<std::string>());
    if (out.name.empty()) return detail::PersonaFailure::Parse;
    const auto key = detail::lower(out.name);
    for (const auto& p : existing)
      if (detail::lower(p.name) == key) return detail::PersonaFailure::Duplicate;
    return detail::PersonaFailure::None;
  });
}

inline ChatRequest ipip_persona_request(const std::string& task_description, const std::vector<Persona>& existing,
                                        const LlmSettings& llm, const IpipOptions& ipip) {
  const auto system = render_prompt("persona_ipip_system", {{"characteristics", ipip.render()},
                                                            {"example_1", std::string(prompt_text("persona_ipip_example_1"))},
                                                            {"example_2", std::string(prompt_text("persona_ipip_example_2"))}});
  const auto user = render_prompt("persona_ipip_user",
                                  {{"task", task_description}, {"existing", detail::existing_personas_text(existing)}});
  return ChatRequest::make(llm.model_name, system, user, llm.sampling);
}

inline std::string describe_traits(const TraitMap& traits, const IpipOptions& ipip) {
  std::vector<std::string> parts;
  for (const auto& [trait, _] : ipip.traits) parts.push_back(trait + ": " + traits.at(trait));
  return join(parts, "; ");
}

inline Persona generate_ipip_persona(const std::string& task_description, const std::vector<Persona>& existing,
                                     const Gateway& gateway, const LlmSettings& llm,
                                     const PersonaGenerationOptions& options = {}, PersonaCallLog* log = nullptr) {
  const auto& ipip = options.ipip;
  const auto request = ipip_persona_request(task_description, existing, llm, ipip);
  return detail::generate_with_retries(gateway, request, options.max_attempts, log,
                                       [&](const std::string& raw, Persona& out) {
    const auto j = extract_first_json_object(raw);
    if (!j || !j->contains("role") || !(*j)["role"].is_string() || !j->contains("traits") ||
        !(*j)["traits"].is_object())
      return detail::PersonaFailure::Parse;
    const auto& given = (*j)["traits"];
    TraitMap traits;
    for (const auto& [trait, allowed] : ipip.traits) {
      if (!given.contains(trait) || !given[trait].is_string()) return detail::PersonaFailure::Parse;
      const auto value = detail::lower(detail::trim(given[trait].get<std::string>()));
      const auto hit = std::find_if(allowed.begin(), allowed.end(),
                                    [&](const std::string& o) { return detail::lower(o) == value; });
      if (hit == allowed.end()) return detail::PersonaFailure::OutOfRange;
      traits[trait] = *hit;
    }
    out.name = detail::trim((*j)["role"].get<std::string>());
    if (out.name.empty()) return detail::PersonaFailure::Parse;
    for (const auto& p : existing)
      if (p.traits && *p.traits == traits) return detail::PersonaFailure::Duplicate;
    out.description = describe_traits(traits, ipip);
    out.traits = std::move(traits);
    return detail::PersonaFailure::None;
  });
}

// Builds a panel of n agents sharing one response generator. Generated
// personas are created one at a time, each conditioned on the earlier ones.
inline std::vector<AgentProfile> build_panel(PersonaGeneratorKind kind, int n, ResponseGeneratorKind generator,
                                             const TaskInstance& task, const Gateway& gateway, const LlmSettings& llm,
                                             const PersonaGenerationOptions& options = {},
                                             PersonaCallLog* log = nullptr) {
  std::vector<Persona> personas;
  if (kind == PersonaGeneratorKind::None) {
    personas = neutral_panel(n);
  } else {
    if (n < 1) throw PreconditionViolation("panel size must be >= 1");
    const auto description = persona_description_for_prompt(task);
    for (int i = 0; i < n; ++i) {
      personas.push_back(kind == PersonaGeneratorKind::Expert
                             ? generate_expert_persona(description, personas, gateway, llm, options, log)
                             : generate_ipip_persona(description, personas, gateway, llm, options, log));
    }
  }
  std::vector<AgentProfile> panel;
  for (int i = 0; i < n; ++i) panel.push_back({i + 1, personas[static_cast<std::size_t>(i)], generator});
  return panel;
}

// ---------------------------------------------------------------------------
// Debate prompts

enum class TurnPhase { FirstDraft, Improve, Feedback, Revise };

struct TurnPhaseRequest {
  TurnPhase phase = TurnPhase::FirstDraft;
  ResponseGeneratorKind generator = ResponseGeneratorKind::Simple;
  std::string visible_context;
  std::optional<std::string> current_draft_text;
};

inline SlotMap persona_slots(const Persona& persona) {
  return {{"persona_name", persona.name}, {"persona_description", persona.description}};
}

// "<name>: <text>" per visible message, one per line.
inline std::string render_discussion(const DebateState& state, const std::vector<Message>& visible) {
  std::vector<std::string> lines;
  for (const auto& m : visible) {
    const std::string name = in_panel(state, m.agent_id) ? agent(state, m.agent_id).persona.name : "Judge";
    lines.push_back(name + ": " + m.text);
  }
  return join(lines, "\n");
}

inline std::string render_debate_system_prompt(const AgentProfile& speaker, const TaskInstance& task,
                                               const std::optional<SolutionDraft>& draft,
                                               const std::string& visible_context) {
  auto slots = persona_slots(speaker.persona);
  slots["instruction"] = task_instruction(task);
  slots["input"] = task_input(task);
  slots["context"] = task_context(task);
  slots["has_draft"] = draft ? "1" : "";
  slots["current_solution"] = draft ? draft->text : "";
  slots["discussion"] = visible_context;
  return render_prompt("discussion_system", slots);
}

inline std::string render_debate_system_prompt(const AgentProfile& speaker, const DebateState& state,
                                               const std::vector<Message>& visible) {
  return render_debate_system_prompt(speaker, state.task, state.current_draft, render_discussion(state, visible));
}

// The first draft is requested with the generator's improve prompt; the
// system prompt carries the "nobody proposed a solution" sentence.
inline std::string render_turn_user_prompt(const TurnPhaseRequest& req) {
  if ((req.phase == TurnPhase::FirstDraft) == req.current_draft_text.has_value())
    throw PreconditionViolation("FirstDraft is required exactly when no draft exists");
  switch (req.phase) {
    case TurnPhase::FirstDraft:
    case TurnPhase::Improve: return std::string(prompt_text(user_prompt_name(req.generator, "improve")));
    case TurnPhase::Feedback: return std::string(prompt_text(user_prompt_name(req.generator, "feedback")));
    case TurnPhase::Revise: return std::string(prompt_text(user_prompt_name(req.generator, "revise")));
  }
  return {};
}

// Case-insensitive [AGREE]/[DISAGREE] scan; the last marker wins.
inline Agreement parse_agreement(std::string_view text) {
  const auto lowered = detail::lower(std::string(text));
  const auto agree = lowered.rfind("[agree]");
  const auto disagree = lowered.rfind("[disagree]");
  if (agree == std::string::npos && disagree == std::string::npos) return Agreement::Unmarked;
  if (agree == std::string::npos) return Agreement::Disagree;
  if (disagree == std::string::npos) return Agreement::Agree;
  return agree > disagree ? Agreement::Agree : Agreement::Disagree;
}

// ---------------------------------------------------------------------------
// Final answer extraction

inline ChatRequest extraction_request(const AgentProfile& agent, const TaskInstance& task,
                                      const std::string& previous_response, const LlmSettings& llm) {
  if (previous_response.empty()) throw PreconditionViolation("extraction needs a non-empty previous response");
  const auto system = render_prompt("role_system", persona_slots(agent.persona));
  const auto user = render_prompt("extraction_user", {{"instruction", task_instruction(task)},
                                                      {"input", task_input(task)},
                                                      {"previous_response", previous_response}});
  return ChatRequest::make(llm.model_name, system, user, llm.sampling);
}

// Returns the extractor's output verbatim (it may copy the whole response
// when no solution is present).
inline ChatResponse extract_final_answer(const AgentProfile& agent, const TaskInstance& task,
                                         const std::string& previous_response, const Gateway& gateway,
                                         const LlmSettings& llm) {
  return gateway.complete(extraction_request(agent, task, previous_response, llm));
}

}  // namespace agora
