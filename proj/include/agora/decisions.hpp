#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "agora/agents.hpp"
#include "agora/debate_state.hpp"
#include "agora/error.hpp"
#include "agora/gateway.hpp"
#include "agora/prompts.hpp"
#include "agora/rational.hpp"
#include "agora/types.hpp"
#include "agora/voting.hpp"

namespace agora {

inline bool consensus_reached(const Rational& fraction, ProtocolKind kind) {
  if (fraction < Rational(0) || fraction > Rational(1))
    throw PreconditionViolation("agreement fraction outside [0, 1]");
  switch (kind) {
    case ProtocolKind::MajorityConsensus: return fraction > Rational(1, 2);
    case ProtocolKind::SupermajorityConsensus: return fraction > Rational(33, 50);
    case ProtocolKind::UnanimityConsensus: return fraction == Rational(1);
    default: throw PreconditionViolation("consensus_reached needs a consensus protocol");
  }
}

// Each tie pushes the vote back by one turn.
inline bool voting_due(int turn, ProtocolKind kind, int voting_after_turns = 3, int ties_so_far = 0) {
  if (!is_voting(kind) && kind != ProtocolKind::Judge) throw PreconditionViolation("voting_due needs a voting protocol");
  return turn == voting_after_turns + ties_so_far;
}

struct DecisionOptions {
  ProtocolKind protocol = ProtocolKind::MajorityConsensus;
  int max_turns = 7;
  int voting_after_turns = 3;
  int cumulative_points = 10;
  int max_vote_attempts = 3;
  LlmSettings llm;
};

// Every agent's final answer, extracted from its latest discussion
// message, in panel order. Equal answers keep separate positions.
inline std::vector<std::string> collect_candidates(DebateState& state, const Gateway& gateway, const LlmSettings& llm) {
  if (state.panel.size() < 2) throw PreconditionViolation("collect_candidates needs at least 2 agents");
  std::vector<std::string> out;
  for (const auto& a : state.panel) {
    const auto* last = last_discussion_message(state, a.agent_id);
    std::string previous = last ? last->text : (state.current_draft ? state.current_draft->text : "");
    const auto resp = extract_final_answer(a, state.task, previous, gateway, llm);
    Message m;
    m.seq = next_seq(state);
    m.turn = state.turn;
    m.agent_id = a.agent_id;
    m.phase = Phase::Extraction;
    m.text = resp.text;
    m.wall_clock_ms = resp.latency_ms;
    append_message(state, std::move(m));
    out.push_back(resp.text);
  }
  return out;
}

inline ChatRequest vote_request(const AgentProfile& voter, const TaskInstance& task,
                                const std::vector<std::string>& candidates, ProtocolKind kind, int budget,
                                const LlmSettings& llm) {
  SlotMap slots{{"instruction", task_instruction(task)},
                {"input", task_input(task)},
                {"solutions", render_solution_list(candidates)}};
  std::string name;
  switch (kind) {
    case ProtocolKind::SimpleVoting: name = "vote_simple"; break;
    case ProtocolKind::ApprovalVoting: name = "vote_approval"; break;
    case ProtocolKind::RankedVoting: name = "vote_ranked"; break;
    case ProtocolKind::CumulativeVoting:
      name = "vote_cumulative";
      slots["budget"] = std::to_string(budget);
      break;
    default: throw PreconditionViolation("vote_request needs a voting protocol");
  }
  return ChatRequest::make(llm.model_name, render_prompt("role_system", persona_slots(voter.persona)),
                           render_prompt(name, slots), llm.sampling);
}

inline ChatRequest judge_request(const TaskInstance& task, const std::vector<std::string>& candidates,
                                 const LlmSettings& llm) {
  return ChatRequest::make(llm.model_name, "",
                           render_prompt("judge", {{"instruction", task_instruction(task)},
                                                   {"input", task_input(task)},
                                                   {"solutions", render_solution_list(candidates)}}),
                           llm.sampling);
}

struct TieDetected {
  std::set<int> tied;
  std::vector<std::string> candidates;
  std::vector<Ballot> ballots;
  Tally tally;
};

using VoteResult = std::variant<DecisionOutcome, TieDetected>;

// Asks one agent for a ballot, re-prompting on parse failure. Every
// attempt is logged as a Vote message.
inline Ballot cast_ballot(DebateState& state, const AgentProfile& voter, const std::vector<std::string>& candidates,
                          const Gateway& gateway, const DecisionOptions& opts) {
  const auto req = vote_request(voter, state.task, candidates, opts.protocol, opts.cumulative_points, opts.llm);
  const int k = static_cast<int>(candidates.size());
  Ballot b;
  for (int attempt = 1; attempt <= opts.max_vote_attempts; ++attempt) {
    const auto resp = gateway.complete(req);
    Message m;
    m.seq = next_seq(state);
    m.turn = state.turn;
    m.agent_id = voter.agent_id;
    m.phase = Phase::Vote;
    m.text = resp.text;
    m.wall_clock_ms = resp.latency_ms;
    append_message(state, m);
    b = parse_ballot(opts.protocol, voter.agent_id, resp.text, k, opts.cumulative_points);
    b.attempts = attempt;
    b.message_seq = m.seq;
    if (b.valid) break;
  }
  return b;
}

inline VoteResult run_vote_round(DebateState& state, const Gateway& gateway, const DecisionOptions& opts) {
  if (!is_voting(opts.protocol)) throw PreconditionViolation("run_vote_round needs a voting protocol");
  auto candidates = collect_candidates(state, gateway, opts.llm);
  std::vector<Ballot> ballots;
  for (const auto& a : state.panel) ballots.push_back(cast_ballot(state, a, candidates, gateway, opts));

  DecisionOutcome out;
  out.protocol = opts.protocol;
  out.decided_at_turn = state.turn;
  out.candidates = candidates;
  out.ballots = ballots;
  Tally t;
  try {
    t = tally(opts.protocol, ballots, static_cast<int>(candidates.size()));
  } catch (const AllBallotsInvalid&) {
    out.success = false;
    out.final_text = state.current_draft ? state.current_draft->text : "";
    out.fallback_reason = "all ballots invalid";
    return out;
  }
  if (t.winners.size() > 1) return TieDetected{t.winners, std::move(candidates), std::move(ballots), t};
  out.success = true;
  out.final_text = candidates[*t.winners.begin() - 1];
  return out;
}

inline DecisionOutcome deterministic_pick(const DebateState& state, ProtocolKind kind, const TieDetected& tie) {
  DecisionOutcome out;
  out.protocol = kind;
  out.decided_at_turn = state.turn;
  out.candidates = tie.candidates;
  out.ballots = tie.ballots;
  out.success = true;
  out.final_text = tie.candidates[*tie.tied.begin() - 1];
  out.tie_broken = TieBreak::DeterministicIndex;
  return out;
}

// The judge is not a panelist: agent_id 0, no persona, one call.
inline DecisionOutcome judge_decide(DebateState& state, const std::vector<std::string>& candidates,
                                    const Gateway& gateway, const LlmSettings& llm) {
  if (candidates.empty()) throw PreconditionViolation("judge needs at least one candidate");
  DecisionOutcome out;
  out.protocol = ProtocolKind::Judge;
  out.decided_at_turn = state.turn;
  out.candidates = candidates;
  try {
    const auto resp = gateway.complete(judge_request(state.task, candidates, llm));
    Message m;
    m.seq = next_seq(state);
    m.turn = state.turn;
    m.agent_id = 0;
    m.phase = Phase::Judge;
    m.text = resp.text;
    m.wall_clock_ms = resp.latency_ms;
    append_message(state, std::move(m));
    out.final_text = resp.text;
    out.success = true;
  } catch (const Error& e) {
    out.final_text = candidates.front();
    out.success = false;
    out.fallback_reason = std::string("judge call failed: ") + e.what();
  }
  return out;
}

// Called after every completed turn; nullopt means "run another turn".
class Decider {
 public:
  explicit Decider(DecisionOptions opts) : opts_(std::move(opts)) {}

  std::optional<DecisionOutcome> after_turn(DebateState& state, const Gateway& gateway) {
    const bool at_cap = state.turn >= opts_.max_turns;
    if (is_consensus(opts_.protocol)) {
      if (state.current_draft && consensus_reached(agreement_fraction(state), opts_.protocol))
        return finished(state, true, "");
      if (at_cap) return finished(state, false, "turn cap reached without consensus");
      return std::nullopt;
    }

    if (!voting_due(state.turn, opts_.protocol, opts_.voting_after_turns, ties_) && !at_cap) return std::nullopt;

    if (opts_.protocol == ProtocolKind::Judge) return judge_decide(state, collect_candidates(state, gateway, opts_.llm), gateway, opts_.llm);

    auto result = run_vote_round(state, gateway, opts_);
    if (auto* outcome = std::get_if<DecisionOutcome>(&result)) {
      if (ties_ > 0 && outcome->success) outcome->tie_broken = TieBreak::ExtraRound;
      return *outcome;
    }
    const auto& tie = std::get<TieDetected>(result);
    if (ties_ == 0 && !at_cap) {
      ++ties_;
      return std::nullopt;
    }
    return deterministic_pick(state, opts_.protocol, tie);
  }

  int ties_so_far() const { return ties_; }
  const DecisionOptions& options() const { return opts_; }

 private:
  DecisionOutcome finished(const DebateState& state, bool success, std::string reason) const {
    DecisionOutcome out;
    out.protocol = opts_.protocol;
    out.final_text = state.current_draft ? state.current_draft->text : "";
    out.success = success;
    out.decided_at_turn = state.turn;
    out.fallback_reason = std::move(reason);
    return out;
  }

  DecisionOptions opts_;
  int ties_ = 0;
};

}  // namespace agora
