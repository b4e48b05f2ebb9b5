#pragma once

#include <algorithm>
#include <string>
#include <utility>

#include "agora/error.hpp"
#include "agora/rational.hpp"
#include "agora/types.hpp"

namespace agora {

inline DebateState make_debate_state(TaskInstance task, std::vector<AgentProfile> panel) {
  for (std::size_t i = 0; i < panel.size(); ++i) {
    if (panel[i].agent_id != static_cast<int>(i) + 1)
      throw PreconditionViolation("panel agent ids must be 1..n without gaps");
  }
  DebateState state;
  state.task = std::move(task);
  state.panel = std::move(panel);
  return state;
}

inline std::int64_t next_seq(const DebateState& state) {
  return state.transcript.empty() ? 1 : state.transcript.back().seq + 1;
}

inline bool in_panel(const DebateState& state, int agent_id) {
  return agent_id >= 1 && agent_id <= static_cast<int>(state.panel.size());
}

inline const AgentProfile& agent(const DebateState& state, int agent_id) {
  if (!in_panel(state, agent_id)) throw PreconditionViolation("unknown agent id " + std::to_string(agent_id));
  return state.panel[static_cast<std::size_t>(agent_id - 1)];
}

// Appends `msg` and applies the draft/flag bookkeeping:
//  - a proposal installs a new current draft and resets all flags to absent
//    except the author's, which becomes Agree;
//  - otherwise an agreement marker sets the author's flag (Unmarked counts as
//    Disagree).
inline void append_message(DebateState& state, Message msg) {
  if (state.ended) throw DebateEnded("debate already ended");
  const auto expected = next_seq(state);
  if (msg.seq != expected) {
    throw SequenceViolation("expected seq " + std::to_string(expected) + ", got " + std::to_string(msg.seq));
  }
  if (msg.turn < 1 || msg.turn < state.turn) {
    throw SequenceViolation("message turn " + std::to_string(msg.turn) + " precedes state turn " +
                            std::to_string(state.turn));
  }
  if (!state.transcript.empty() && msg.turn < state.transcript.back().turn) {
    throw SequenceViolation("message turn decreases");
  }
  if (msg.agreement && msg.phase != Phase::Improve && msg.phase != Phase::Feedback) {
    throw PreconditionViolation("agreement only allowed on improve/feedback messages");
  }
  if (msg.phase == Phase::Judge ? msg.agent_id != 0 : !in_panel(state, msg.agent_id)) {
    throw PreconditionViolation("message author " + std::to_string(msg.agent_id) + " not valid for phase " +
                                std::string(to_string(msg.phase)));
  }

  if (msg.proposal) {
    state.current_draft = SolutionDraft{msg.text, msg.agent_id, msg.turn};
    state.agree_flags.clear();
    state.agree_flags[msg.agent_id] = AgreeFlag::Agree;
  } else if (msg.agreement) {
    state.agree_flags[msg.agent_id] = *msg.agreement == Agreement::Agree ? AgreeFlag::Agree : AgreeFlag::Disagree;
  }
  state.transcript.push_back(std::move(msg));
}

inline Rational agreement_fraction(const DebateState& state) {
  if (state.panel.empty()) throw PreconditionViolation("agreement_fraction on an empty panel");
  const auto agreeing = std::count_if(state.agree_flags.begin(), state.agree_flags.end(),
                                      [](const auto& kv) { return kv.second == AgreeFlag::Agree; });
  return Rational(agreeing, static_cast<std::int64_t>(state.panel.size()));
}

inline void finish(DebateState& state, DecisionOutcome outcome) {
  if (state.ended) throw DebateEnded("debate already ended");
  if (!outcome.success && outcome.fallback_reason.empty())
    throw PreconditionViolation("unsuccessful outcome requires a fallback reason");
  state.outcome = std::move(outcome);
  state.ended = true;
}

// Most recent discussion message written by `agent_id`, if any.
inline const Message* last_discussion_message(const DebateState& state, int agent_id) {
  for (auto it = state.transcript.rbegin(); it != state.transcript.rend(); ++it) {
    if (it->agent_id == agent_id && is_discussion_phase(it->phase)) return &*it;
  }
  return nullptr;
}

}  // namespace agora
