#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "agora/error.hpp"

namespace agora {

enum class ResponseGeneratorKind { Simple, Critical, Reasoning };
enum class PersonaGeneratorKind { None, Expert, IPIP };
enum class ParadigmKind { Memory, Relay, Report, Debate };
enum class ProtocolKind {
  MajorityConsensus,
  SupermajorityConsensus,
  UnanimityConsensus,
  SimpleVoting,
  ApprovalVoting,
  RankedVoting,
  CumulativeVoting,
  Judge,
};
enum class Phase { Draft, Improve, Feedback, CentralSynthesis, Vote, Extraction, Judge };
enum class Agreement { Agree, Disagree, Unmarked };
enum class AgreeFlag { Agree, Disagree };
enum class TieBreak { ExtraRound, DeterministicIndex };

namespace detail {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

template <typename E, std::size_t N>
constexpr std::string_view name_of(const NameTable<E, N>& table, E value) {
  for (const auto& [e, name] : table)
    if (e == value) return name;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> lookup(const NameTable<E, N>& table, std::string_view name) {
  for (const auto& [e, n] : table)
    if (n == name) return e;
  return std::nullopt;
}

inline constexpr NameTable<ResponseGeneratorKind, 3> kGenerators{{
    {ResponseGeneratorKind::Simple, "simple"},
    {ResponseGeneratorKind::Critical, "critical"},
    {ResponseGeneratorKind::Reasoning, "reasoning"},
}};
inline constexpr NameTable<PersonaGeneratorKind, 3> kPersonaGenerators{{
    {PersonaGeneratorKind::None, "none"},
    {PersonaGeneratorKind::Expert, "expert"},
    {PersonaGeneratorKind::IPIP, "ipip"},
}};
inline constexpr NameTable<ParadigmKind, 4> kParadigms{{
    {ParadigmKind::Memory, "memory"},
    {ParadigmKind::Relay, "relay"},
    {ParadigmKind::Report, "report"},
    {ParadigmKind::Debate, "debate"},
}};
inline constexpr NameTable<ProtocolKind, 8> kProtocols{{
    {ProtocolKind::MajorityConsensus, "majority_consensus"},
    {ProtocolKind::SupermajorityConsensus, "supermajority_consensus"},
    {ProtocolKind::UnanimityConsensus, "unanimity_consensus"},
    {ProtocolKind::SimpleVoting, "simple_voting"},
    {ProtocolKind::ApprovalVoting, "approval_voting"},
    {ProtocolKind::RankedVoting, "ranked_voting"},
    {ProtocolKind::CumulativeVoting, "cumulative_voting"},
    {ProtocolKind::Judge, "judge"},
}};
inline constexpr NameTable<Phase, 7> kPhases{{
    {Phase::Draft, "draft"},
    {Phase::Improve, "improve"},
    {Phase::Feedback, "feedback"},
    {Phase::CentralSynthesis, "central_synthesis"},
    {Phase::Vote, "vote"},
    {Phase::Extraction, "extraction"},
    {Phase::Judge, "judge"},
}};
inline constexpr NameTable<Agreement, 3> kAgreements{{
    {Agreement::Agree, "agree"},
    {Agreement::Disagree, "disagree"},
    {Agreement::Unmarked, "unmarked"},
}};
inline constexpr NameTable<TieBreak, 2> kTieBreaks{{
    {TieBreak::ExtraRound, "extra_round"},
    {TieBreak::DeterministicIndex, "deterministic_index"},
}};

}  // namespace detail

constexpr std::string_view to_string(ResponseGeneratorKind k) { return detail::name_of(detail::kGenerators, k); }
constexpr std::string_view to_string(PersonaGeneratorKind k) { return detail::name_of(detail::kPersonaGenerators, k); }
constexpr std::string_view to_string(ParadigmKind k) { return detail::name_of(detail::kParadigms, k); }
constexpr std::string_view to_string(ProtocolKind k) { return detail::name_of(detail::kProtocols, k); }
constexpr std::string_view to_string(Phase k) { return detail::name_of(detail::kPhases, k); }
constexpr std::string_view to_string(Agreement k) { return detail::name_of(detail::kAgreements, k); }
constexpr std::string_view to_string(TieBreak k) { return detail::name_of(detail::kTieBreaks, k); }

// Parsers for the names above; return nullopt for anything unknown.
template <typename E>
std::optional<E> parse_enum(std::string_view name);
template <>
inline std::optional<ResponseGeneratorKind> parse_enum(std::string_view n) { return detail::lookup(detail::kGenerators, n); }
template <>
inline std::optional<PersonaGeneratorKind> parse_enum(std::string_view n) { return detail::lookup(detail::kPersonaGenerators, n); }
template <>
inline std::optional<ParadigmKind> parse_enum(std::string_view n) { return detail::lookup(detail::kParadigms, n); }
template <>
inline std::optional<ProtocolKind> parse_enum(std::string_view n) { return detail::lookup(detail::kProtocols, n); }
template <>
inline std::optional<Phase> parse_enum(std::string_view n) { return detail::lookup(detail::kPhases, n); }
template <>
inline std::optional<Agreement> parse_enum(std::string_view n) { return detail::lookup(detail::kAgreements, n); }
template <>
inline std::optional<TieBreak> parse_enum(std::string_view n) { return detail::lookup(detail::kTieBreaks, n); }

constexpr bool is_consensus(ProtocolKind k) {
  return k == ProtocolKind::MajorityConsensus || k == ProtocolKind::SupermajorityConsensus ||
         k == ProtocolKind::UnanimityConsensus;
}
constexpr bool is_voting(ProtocolKind k) {
  return k == ProtocolKind::SimpleVoting || k == ProtocolKind::ApprovalVoting ||
         k == ProtocolKind::RankedVoting || k == ProtocolKind::CumulativeVoting;
}

// Phases that make up the discussion proper; decision traffic (votes,
// extraction, judge) is logged but never shown to agents as discussion.
constexpr bool is_discussion_phase(Phase p) {
  return p == Phase::Draft || p == Phase::Improve || p == Phase::Feedback || p == Phase::CentralSynthesis;
}

struct TaskInstance {
  std::string id;
  std::string instruction_key;
  std::vector<std::string> input_lines;
  std::vector<std::string> context_lines;
  std::vector<std::string> references;
  std::optional<char> answer_letter;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

using TraitMap = std::map<std::string, std::string>;

struct Persona {
  std::string name;
  std::string description;
  std::optional<TraitMap> traits;  // IPIP only

  friend bool operator==(const Persona&, const Persona&) = default;
};

struct AgentProfile {
  int agent_id = 0;
  Persona persona;
  ResponseGeneratorKind response_generator = ResponseGeneratorKind::Simple;

  friend bool operator==(const AgentProfile&, const AgentProfile&) = default;
};

struct Message {
  std::int64_t seq = 0;
  int turn = 1;
  int agent_id = 0;  // 0 is the judge, who is not a panelist
  Phase phase = Phase::Draft;
  std::string text;
  std::optional<Agreement> agreement;
  bool proposal = false;  // installs `text` as the new current draft
  std::int64_t wall_clock_ms = 0;

  friend bool operator==(const Message&, const Message&) = default;
};

struct SolutionDraft {
  std::string text;
  int author_id = 0;
  int turn = 0;

  friend bool operator==(const SolutionDraft&, const SolutionDraft&) = default;
};

// Parsed forms of the four ballot kinds.
using VoteIndex = int;
using ApprovalSet = std::set<int>;
using Ranking = std::vector<int>;
using PointMap = std::map<int, int>;
using BallotChoice = std::variant<std::monostate, VoteIndex, ApprovalSet, Ranking, PointMap>;

struct Ballot {
  int voter = 0;
  std::string raw_text;
  BallotChoice parsed;
  bool valid = false;
  std::string failure_reason;  // set iff !valid
  std::string warning;         // e.g. truncated ranking
  int attempts = 0;
  std::int64_t message_seq = 0;

  static Ballot accepted(int voter, std::string raw, BallotChoice choice) {
    Ballot b;
    b.voter = voter;
    b.raw_text = std::move(raw);
    b.parsed = std::move(choice);
    b.valid = true;
    return b;
  }

  friend bool operator==(const Ballot&, const Ballot&) = default;
};

struct DecisionOutcome {
  std::optional<ProtocolKind> protocol;  // empty for single-agent baselines
  std::string final_text;
  bool success = false;
  int decided_at_turn = 0;
  std::vector<std::string> candidates;
  std::vector<Ballot> ballots;
  std::optional<TieBreak> tie_broken;
  std::string fallback_reason;  // required when !success

  friend bool operator==(const DecisionOutcome&, const DecisionOutcome&) = default;
};

struct DebateState {
  TaskInstance task;
  std::vector<AgentProfile> panel;
  std::vector<Message> transcript;
  std::optional<SolutionDraft> current_draft;
  std::map<int, AgreeFlag> agree_flags;  // absent key = no flag
  int turn = 0;                          // completed turns
  bool ended = false;
  std::optional<DecisionOutcome> outcome;

  friend bool operator==(const DebateState&, const DebateState&) = default;
};

}  // namespace agora
