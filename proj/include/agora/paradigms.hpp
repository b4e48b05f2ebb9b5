#pragma once

#include <algorithm>
#include <functional>
#include <future>
#include <string>
#include <vector>

#include "agora/agents.hpp"
#include "agora/debate_state.hpp"
#include "agora/error.hpp"
#include "agora/gateway.hpp"
#include "agora/types.hpp"

namespace agora {

enum class StepPhase { Improve, Feedback, CentralSynthesis };
enum class Visibility { All, LastMessageOnly, OwnAndCentral, PairOnly };

inline constexpr int kCentralAgent = 1;

struct TurnStep {
  int speaker = 0;
  StepPhase phase = StepPhase::Improve;
  Visibility visibility = Visibility::All;
  std::vector<int> group;  // PairOnly: members of the speaker's pair (itself when unpaired)

  friend bool operator==(const TurnStep&, const TurnStep&) = default;
};

inline int min_panel_size(ParadigmKind kind) {
  return kind == ParadigmKind::Report || kind == ParadigmKind::Debate ? 3 : 2;
}

// Speaker order for one turn. The schedule does not change across turns;
// `turn` is accepted for callers that key schedules by turn.
inline std::vector<TurnStep> schedule(ParadigmKind kind, int n_agents, int /*turn*/, int debate_exchanges = 2) {
  if (n_agents < min_panel_size(kind)) {
    throw PanelTooSmall(std::string(to_string(kind)) + " needs at least " + std::to_string(min_panel_size(kind)) +
                        " agents, got " + std::to_string(n_agents));
  }
  std::vector<TurnStep> steps;
  switch (kind) {
    case ParadigmKind::Memory:
    case ParadigmKind::Relay: {
      const auto vis = kind == ParadigmKind::Memory ? Visibility::All : Visibility::LastMessageOnly;
      for (int a = 1; a <= n_agents; ++a) steps.push_back({a, StepPhase::Improve, vis, {}});
      break;
    }
    case ParadigmKind::Report:
      for (int a = 2; a <= n_agents; ++a) steps.push_back({a, StepPhase::Improve, Visibility::OwnAndCentral, {}});
      steps.push_back({kCentralAgent, StepPhase::CentralSynthesis, Visibility::All, {}});
      break;
    case ParadigmKind::Debate: {
      if (debate_exchanges < 1) throw PreconditionViolation("debate_exchanges must be >= 1");
      int a = 2;
      for (; a + 1 <= n_agents; a += 2) {
        const std::vector<int> pair{a, a + 1};
        for (int k = 0; k < debate_exchanges; ++k)
          steps.push_back({k % 2 == 0 ? a : a + 1, StepPhase::Feedback, Visibility::PairOnly, pair});
      }
      if (a == n_agents) steps.push_back({a, StepPhase::Feedback, Visibility::PairOnly, {a}});
      steps.push_back({kCentralAgent, StepPhase::CentralSynthesis, Visibility::All, {}});
      break;
    }
  }
  return steps;
}

// The part of the transcript the speaker of `step` may see. The turn in
// progress is state.turn + 1.
inline std::vector<Message> visible_messages(ParadigmKind /*kind*/, const DebateState& state, const TurnStep& step) {
  const int current_turn = state.turn + 1;
  std::vector<Message> out;
  const Message* last = nullptr;
  for (const auto& m : state.transcript) {
    if (!is_discussion_phase(m.phase)) continue;
    last = &m;
    switch (step.visibility) {
      case Visibility::All:
        out.push_back(m);
        break;
      case Visibility::LastMessageOnly:
        break;
      case Visibility::OwnAndCentral:
        if (m.agent_id == step.speaker || m.phase == Phase::CentralSynthesis) out.push_back(m);
        break;
      case Visibility::PairOnly: {
        const bool unpaired = step.group.size() == 1;
        const bool in_group = std::find(step.group.begin(), step.group.end(), m.agent_id) != step.group.end();
        if (m.phase == Phase::CentralSynthesis) out.push_back(m);
        else if (in_group && (unpaired || m.turn == current_turn)) out.push_back(m);
        break;
      }
    }
  }
  if (step.visibility == Visibility::LastMessageOnly && last) out.push_back(*last);
  return out;
}

using StepObserver = std::function<void(const TurnStep&, const std::vector<Message>& visible, const ChatRequest&)>;

struct TurnOptions {
  LlmSettings llm;
  int max_turns = 7;
  int debate_exchanges = 2;
  bool parallel_report_peers = false;
  StepObserver observer;
};

namespace detail {

struct PlannedStep {
  TurnStep step;
  std::vector<Message> visible;
  ChatRequest request;
  Phase message_phase = Phase::Improve;
  TurnPhase turn_phase = TurnPhase::FirstDraft;
  bool central = false;
};

inline bool peers_all_rejected(const DebateState& state, int turn) {
  bool any = false;
  for (const auto& m : state.transcript) {
    if (m.turn != turn || m.agent_id == kCentralAgent || !m.agreement) continue;
    any = true;
    if (*m.agreement == Agreement::Agree) return false;
  }
  return any;
}

inline PlannedStep plan_step(ParadigmKind kind, const DebateState& state, const TurnStep& step,
                             const TurnOptions& options) {
  PlannedStep plan;
  plan.step = step;
  plan.visible = visible_messages(kind, state, step);
  const auto& speaker = agent(state, step.speaker);
  const bool has_draft = state.current_draft.has_value();

  switch (step.phase) {
    case StepPhase::Improve:
      plan.turn_phase = has_draft ? TurnPhase::Improve : TurnPhase::FirstDraft;
      plan.message_phase = (!has_draft && kind != ParadigmKind::Report) ? Phase::Draft : Phase::Improve;
      break;
    case StepPhase::Feedback:
      plan.turn_phase = has_draft ? TurnPhase::Feedback : TurnPhase::FirstDraft;
      plan.message_phase = Phase::Feedback;
      break;
    case StepPhase::CentralSynthesis:
      plan.central = true;
      plan.message_phase = Phase::CentralSynthesis;
      if (!has_draft) plan.turn_phase = TurnPhase::FirstDraft;
      else if (peers_all_rejected(state, state.turn + 1)) plan.turn_phase = TurnPhase::Revise;
      else plan.turn_phase = TurnPhase::Improve;
      break;
  }

  TurnPhaseRequest req;
  req.phase = plan.turn_phase;
  req.generator = speaker.response_generator;
  req.visible_context = render_discussion(state, plan.visible);
  if (has_draft) req.current_draft_text = state.current_draft->text;
  plan.request = ChatRequest::make(options.llm.model_name,
                                   render_debate_system_prompt(speaker, state.task, state.current_draft, req.visible_context),
                                   render_turn_user_prompt(req), options.llm.sampling);
  return plan;
}

// Turns a model reply into the logged message per the draft rules.
inline Message make_message(ParadigmKind kind, const DebateState& state, const PlannedStep& plan,
                            const ChatResponse& resp) {
  Message msg;
  msg.seq = next_seq(state);
  msg.turn = state.turn + 1;
  msg.agent_id = plan.step.speaker;
  msg.phase = plan.message_phase;
  msg.text = resp.text;
  msg.wall_clock_ms = resp.latency_ms;

  const bool first_draft = plan.turn_phase == TurnPhase::FirstDraft;
  const bool peers_only_report = kind == ParadigmKind::Report || kind == ParadigmKind::Debate;
  if (plan.central) {
    msg.proposal = first_draft || plan.turn_phase == TurnPhase::Revise ||
                   parse_agreement(resp.text) != Agreement::Agree;
  } else if (first_draft) {
    msg.proposal = !peers_only_report;
  } else {
    msg.agreement = parse_agreement(resp.text);
    msg.proposal = !peers_only_report && plan.message_phase == Phase::Improve && *msg.agreement != Agreement::Agree;
  }
  return msg;
}

}  // namespace detail

// Executes one full schedule and advances state.turn. Gateway errors
// propagate; the caller records the failure.
inline void run_turn(ParadigmKind kind, DebateState& state, const Gateway& gateway, const TurnOptions& options) {
  if (state.ended) throw DebateEnded("run_turn on an ended debate");
  if (state.turn >= options.max_turns) throw PreconditionViolation("turn cap reached; decide instead");
  const auto steps = schedule(kind, static_cast<int>(state.panel.size()), state.turn + 1, options.debate_exchanges);

  std::size_t i = 0;
  if (kind == ParadigmKind::Report && options.parallel_report_peers) {
    // Peer prompts do not depend on each other (no shared visibility, no
    // draft installs), so they can be planned up front and sent together.
    std::vector<detail::PlannedStep> plans;
    for (; i < steps.size() && steps[i].phase != StepPhase::CentralSynthesis; ++i)
      plans.push_back(detail::plan_step(kind, state, steps[i], options));
    std::vector<std::future<ChatResponse>> replies;
    for (const auto& p : plans)
      replies.push_back(std::async(std::launch::async, [&gateway, &p] { return gateway.complete(p.request); }));
    std::vector<ChatResponse> responses;
    for (auto& f : replies) responses.push_back(f.get());
    for (std::size_t k = 0; k < plans.size(); ++k) {
      if (options.observer) options.observer(plans[k].step, plans[k].visible, plans[k].request);
      append_message(state, detail::make_message(kind, state, plans[k], responses[k]));
    }
  }
  for (; i < steps.size(); ++i) {
    const auto plan = detail::plan_step(kind, state, steps[i], options);
    if (options.observer) options.observer(plan.step, plan.visible, plan.request);
    const auto resp = gateway.complete(plan.request);
    append_message(state, detail::make_message(kind, state, plan, resp));
  }
  ++state.turn;
}

}  // namespace agora
