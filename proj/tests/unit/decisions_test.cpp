#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "agora/decisions.hpp"
#include "agora/paradigms.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace agora;
using agora::testing::FnBackend;
using agora::testing::reply;

namespace {

int speaker_of(const ChatRequest& r) {
  const auto& sys = r.content(Role::System);
  const auto at = sys.find("Participant ");
  return at == std::string::npos ? 0 : std::stoi(sys.substr(at + 12));
}

bool is_extraction(const ChatRequest& r) {
  return r.content(Role::User).find("Extract the final solution") != std::string::npos;
}
bool is_vote(const ChatRequest& r) { return r.content(Role::User).find("possible solutions") != std::string::npos; }

// Discussion always agrees; extraction returns "answer <agent>"; each vote
// request is answered by votes(agent, round) where round counts vote rounds.
struct Panel {
  std::function<std::string(int agent, int round)> votes;
  std::function<std::string(const ChatRequest&)> judge = [](const ChatRequest&) { return "judged"; };
  int vote_calls = 0;
  int n = 3;

  Gateway gateway() {
    auto backend = std::make_shared<FnBackend>([this](const ChatRequest& r) -> ChatResponse {
      if (is_extraction(r)) return reply("answer " + std::to_string(speaker_of(r)));
      if (is_vote(r)) {
        const int round = vote_calls++ / n;
        return reply(votes(speaker_of(r), round));
      }
      if (r.content(Role::System).empty()) return reply(judge(r));
      return reply("[AGREE] FINAL SOLUTION: B");
    });
    return agora::testing::gateway_for(backend);
  }
};

DebateState fresh(int n = 3) {
  return make_debate_state(agora::testing::mc_task(), build_panel(PersonaGeneratorKind::None, n, ResponseGeneratorKind::Simple,
                                                           agora::testing::mc_task(), Gateway(nullptr, GatewayOptions{}),
                                                           {}));
}

DecisionOptions voting(ProtocolKind p, int max_turns = 7) {
  DecisionOptions o;
  o.protocol = p;
  o.max_turns = max_turns;
  return o;
}

// Runs turns until the decider returns.
DecisionOutcome debate(DebateState& s, Gateway& gw, const DecisionOptions& o) {
  Decider d(o);
  TurnOptions t;
  t.max_turns = o.max_turns;
  for (;;) {
    run_turn(ParadigmKind::Memory, s, gw, t);
    if (auto out = d.after_turn(s, gw)) return *out;
  }
}

Ballot valid(int voter, BallotChoice c) { return Ballot::accepted(voter, "", std::move(c)); }

}  // namespace

TEST(Consensus, Examples) {
  EXPECT_TRUE(consensus_reached(Rational(2, 3), ProtocolKind::MajorityConsensus));
  EXPECT_TRUE(consensus_reached(Rational(2, 3), ProtocolKind::SupermajorityConsensus));
  EXPECT_FALSE(consensus_reached(Rational(2, 3), ProtocolKind::UnanimityConsensus));
  EXPECT_FALSE(consensus_reached(Rational(1, 2), ProtocolKind::MajorityConsensus));
  EXPECT_FALSE(consensus_reached(Rational(33, 50), ProtocolKind::SupermajorityConsensus));
  EXPECT_TRUE(consensus_reached(Rational(1), ProtocolKind::UnanimityConsensus));
}

TEST(Consensus, MonotoneInFraction) {
  for (auto kind : {ProtocolKind::MajorityConsensus, ProtocolKind::SupermajorityConsensus,
                    ProtocolKind::UnanimityConsensus})
    for (int n = 1; n <= 12; ++n)
      for (int a = 1; a <= n; ++a)
        if (consensus_reached(Rational(a - 1, n), kind)) EXPECT_TRUE(consensus_reached(Rational(a, n), kind));
}

TEST(VotingDue, Examples) {
  EXPECT_TRUE(voting_due(3, ProtocolKind::SimpleVoting));
  EXPECT_FALSE(voting_due(2, ProtocolKind::SimpleVoting));
  EXPECT_TRUE(voting_due(4, ProtocolKind::SimpleVoting, 3, 1));
  EXPECT_FALSE(voting_due(3, ProtocolKind::SimpleVoting, 3, 1));
  EXPECT_THROW(voting_due(3, ProtocolKind::MajorityConsensus), PreconditionViolation);
}

TEST(ParseSimpleVote, Examples) {
  EXPECT_EQ(parse_simple_vote("2", 3), 2);
  EXPECT_EQ(parse_simple_vote("0", 3), 1);
  EXPECT_EQ(parse_simple_vote("I vote for solution 3.", 3), 3);
  EXPECT_THROW(parse_simple_vote("7", 3), VoteParseFailure);
  EXPECT_THROW(parse_simple_vote("none", 3), VoteParseFailure);
}

TEST(ParseApproval, Examples) {
  EXPECT_EQ(parse_approval("1, 3", 3), (std::set<int>{1, 3}));
  EXPECT_EQ(parse_approval("2,2", 3), (std::set<int>{2}));
  EXPECT_THROW(parse_approval("", 3), VoteParseFailure);
  EXPECT_THROW(parse_approval("9", 3), VoteParseFailure);
}

TEST(ParseCumulative, Examples) {
  EXPECT_EQ(parse_cumulative(R"({"1": 7, "2": 3})", 3, 10), (std::map<int, int>{{1, 7}, {2, 3}}));
  EXPECT_THROW(parse_cumulative(R"({"1": 11})", 3, 10), BudgetExceeded);
  EXPECT_EQ(parse_cumulative(R"(Here: {"1": 4})", 3, 10), (std::map<int, int>{{1, 4}}));
  EXPECT_THROW(parse_cumulative(R"({"1": -2})", 3, 10), VoteParseFailure);
  EXPECT_THROW(parse_cumulative("1: 4", 3, 10), VoteParseFailure);
  EXPECT_THROW(parse_cumulative(R"({"7": 1})", 3, 10), VoteParseFailure);
}

TEST(ParseRanked, Examples) {
  EXPECT_EQ(parse_ranked("0 2 1", 3), (std::vector<int>{1, 3, 2}));
  EXPECT_THROW(parse_ranked("1 1 2", 3), DuplicateRank);
  EXPECT_EQ(parse_ranked("2", 3), (std::vector<int>{2}));
  EXPECT_THROW(parse_ranked("", 3), VoteParseFailure);
}

TEST(ParseRanked, TruncatesToFiveWithWarning) {
  const auto r = parse_ranked_detailed("1 2 3 4 5 6 7", 7);
  EXPECT_EQ(r.ranking, (std::vector<int>{1, 2, 3, 4, 5}));
  EXPECT_FALSE(r.warning.empty());
  EXPECT_TRUE(parse_ranked_detailed("1 2", 7).warning.empty());
}

TEST(ParseBallot, InvalidCarriesReason) {
  const auto b = parse_ballot(ProtocolKind::RankedVoting, 2, "3 3", 3, 10);
  EXPECT_FALSE(b.valid);
  EXPECT_FALSE(b.failure_reason.empty());
  EXPECT_TRUE(std::holds_alternative<std::monostate>(b.parsed));
  const auto ok = parse_ballot(ProtocolKind::SimpleVoting, 2, "3", 3, 10);
  EXPECT_TRUE(ok.valid);
  EXPECT_TRUE(ok.failure_reason.empty());
}

TEST(Tally, Examples) {
  EXPECT_EQ(tally(ProtocolKind::SimpleVoting, {valid(1, 1), valid(2, 1), valid(3, 2)}, 3).winners, (std::set<int>{1}));
  const auto ranked = tally(ProtocolKind::RankedVoting,
                            {valid(1, Ranking{1, 2, 3}), valid(2, Ranking{2, 1, 3}), valid(3, Ranking{1, 3, 2})}, 3);
  EXPECT_EQ(ranked.per_solution_score.at(1), Rational(5));
  EXPECT_EQ(ranked.per_solution_score.at(2), Rational(3));
  EXPECT_EQ(ranked.per_solution_score.at(3), Rational(1));
  EXPECT_EQ(ranked.winners, (std::set<int>{1}));
  const auto cum = tally(ProtocolKind::CumulativeVoting, {valid(1, PointMap{{1, 7}, {2, 3}}), valid(2, PointMap{{2, 8}, {1, 2}})}, 3);
  EXPECT_EQ(cum.per_solution_score.at(1), Rational(9));
  EXPECT_EQ(cum.per_solution_score.at(2), Rational(11));
  EXPECT_EQ(cum.winners, (std::set<int>{2}));
}

TEST(Tally, AllInvalidRaises) {
  Ballot bad;
  bad.voter = 1;
  EXPECT_THROW(tally(ProtocolKind::SimpleVoting, {bad, bad}, 3), AllBallotsInvalid);
}

// Anonymity: permuting voters never changes the tally. Neutrality:
// relabelling candidates relabels the winners the same way.
TEST(Tally, AnonymityAndNeutrality) {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 4), n = 1 + static_cast<int>(rng() % 6);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    auto relabel = [&](int c) { return perm[static_cast<std::size_t>(c - 1)]; };

    std::vector<Ballot> ballots, relabelled;
    for (int v = 1; v <= n; ++v) {
      std::vector<int> order(k);
      std::iota(order.begin(), order.end(), 1);
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(1 + rng() % static_cast<unsigned>(k));
      Ranking mapped;
      for (int c : order) mapped.push_back(relabel(c));
      ballots.push_back(valid(v, Ranking(order)));
      relabelled.push_back(valid(v, mapped));
    }
    const auto base = tally(ProtocolKind::RankedVoting, ballots, k);
    auto shuffled = ballots;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ASSERT_EQ(tally(ProtocolKind::RankedVoting, shuffled, k), base);

    std::set<int> expected;
    for (int w : base.winners) expected.insert(relabel(w));
    ASSERT_EQ(tally(ProtocolKind::RankedVoting, relabelled, k).winners, expected);
    // And against the brute-force oracle.
    std::vector<std::vector<int>> rs;
    for (const auto& b : ballots) rs.push_back(std::get<Ranking>(b.parsed));
    ASSERT_EQ(base.winners, oracle::argmax(oracle::borda_scores(rs, k)));
  }
}

TEST(CollectCandidates, AgentOrderAndNoMerging) {
  Panel p;
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  const auto c = collect_candidates(s, gw, {});
  EXPECT_EQ(c, (std::vector<std::string>{"answer 1", "answer 2", "answer 3"}));
  EXPECT_EQ(s.transcript.back().phase, Phase::Extraction);
  auto same = std::make_shared<FnBackend>([](const ChatRequest& r) {
    return reply(is_extraction(r) ? "B" : "[AGREE] B");
  });
  auto gw2 = agora::testing::gateway_for(same);
  auto s2 = fresh(2);
  run_turn(ParadigmKind::Memory, s2, gw2, {});
  EXPECT_EQ(collect_candidates(s2, gw2, {}), (std::vector<std::string>{"B", "B"}));
  auto s1 = fresh(1);
  EXPECT_THROW(collect_candidates(s1, gw2, {}), PreconditionViolation);
}

TEST(VoteRound, UniqueWinner) {
  Panel p;
  p.votes = [](int agent, int) { return agent == 3 ? "2" : "1"; };
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  auto r = run_vote_round(s, gw, voting(ProtocolKind::SimpleVoting));
  ASSERT_TRUE(std::holds_alternative<DecisionOutcome>(r));
  const auto& o = std::get<DecisionOutcome>(r);
  EXPECT_TRUE(o.success);
  EXPECT_EQ(o.final_text, "answer 1");
  EXPECT_EQ(o.ballots.size(), 3u);
}

TEST(VoteRound, ThreeWayTie) {
  Panel p;
  p.votes = [](int agent, int) { return std::to_string(agent); };
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  auto r = run_vote_round(s, gw, voting(ProtocolKind::SimpleVoting));
  ASSERT_TRUE(std::holds_alternative<TieDetected>(r));
  EXPECT_EQ(std::get<TieDetected>(r).tied, (std::set<int>{1, 2, 3}));
}

TEST(VoteRound, AllUnparseableFallsBack) {
  Panel p;
  p.votes = [](int, int) { return "no idea"; };
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  auto r = run_vote_round(s, gw, voting(ProtocolKind::SimpleVoting));
  const auto& o = std::get<DecisionOutcome>(r);
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.final_text, s.current_draft->text);
  EXPECT_FALSE(o.fallback_reason.empty());
  EXPECT_EQ(p.vote_calls, 9);  // three attempts each
  for (const auto& b : o.ballots) EXPECT_EQ(b.attempts, 3);
}

TEST(VoteRound, RepromptRecovers) {
  Panel p;
  // Agent 2 answers garbage on its first attempt only.
  auto agent2_calls = std::make_shared<int>(0);
  p.votes = [agent2_calls](int agent, int) { return agent == 2 && (*agent2_calls)++ == 0 ? "hmm" : "2"; };
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  const auto o = std::get<DecisionOutcome>(run_vote_round(s, gw, voting(ProtocolKind::SimpleVoting)));
  EXPECT_TRUE(o.success);
  EXPECT_EQ(o.ballots[1].attempts, 2);
  EXPECT_EQ(o.final_text, "answer 2");
}

TEST(Decider, UnanimityStopsEarly) {
  Panel p;
  auto gw = p.gateway();
  auto s = fresh();
  const auto o = debate(s, gw, voting(ProtocolKind::UnanimityConsensus));
  EXPECT_TRUE(o.success);
  EXPECT_EQ(o.decided_at_turn, 1);
}

TEST(Decider, MajorityCapFallsBack) {
  auto backend = std::make_shared<FnBackend>([](const ChatRequest& r) {
    return reply(speaker_of(r) == 1 ? "[AGREE] mine" : "[DISAGREE] no");
  });
  auto gw = agora::testing::gateway_for(backend);
  auto s = fresh();
  // Agents 2 and 3 keep proposing, so the flags never reach a majority.
  const auto o = debate(s, gw, voting(ProtocolKind::MajorityConsensus));
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.decided_at_turn, 7);
  EXPECT_EQ(o.final_text, s.current_draft->text);
  EXPECT_FALSE(o.fallback_reason.empty());
}

TEST(Decider, VotingWaitsForDueTurn) {
  Panel p;
  p.votes = [](int, int) { return "1"; };
  auto gw = p.gateway();
  auto s = fresh();
  Decider d(voting(ProtocolKind::SimpleVoting));
  run_turn(ParadigmKind::Memory, s, gw, {});
  EXPECT_FALSE(d.after_turn(s, gw));
  run_turn(ParadigmKind::Memory, s, gw, {});
  EXPECT_FALSE(d.after_turn(s, gw));
  run_turn(ParadigmKind::Memory, s, gw, {});
  const auto o = d.after_turn(s, gw);
  ASSERT_TRUE(o);
  EXPECT_EQ(o->decided_at_turn, 3);
  EXPECT_EQ(o->ballots.size(), 3u);
}

TEST(Decider, FirstTieGetsExtraRound) {
  Panel p;
  p.votes = [](int agent, int round) { return round == 0 ? std::to_string(agent) : "3"; };
  auto gw = p.gateway();
  auto s = fresh();
  const auto o = debate(s, gw, voting(ProtocolKind::SimpleVoting));
  EXPECT_EQ(o.decided_at_turn, 4);
  EXPECT_EQ(o.tie_broken, TieBreak::ExtraRound);
  EXPECT_EQ(o.final_text, "answer 3");
}

TEST(Decider, SecondTiePicksLowestIndex) {
  // Borda with k=3: "1 3" + "3 1" + "2" gives s1 = 3, s3 = 3, s2 = 2, a {1,3}
  // tie in both rounds.
  Panel p;
  p.votes = [](int agent, int) {
    switch (agent) {
      case 1: return "1 3";
      case 2: return "3 1";
      default: return "2";
    }
  };
  auto gw = p.gateway();
  auto s = fresh();
  const auto o = debate(s, gw, voting(ProtocolKind::RankedVoting));
  EXPECT_EQ(o.decided_at_turn, 4);
  EXPECT_EQ(o.tie_broken, TieBreak::DeterministicIndex);
  EXPECT_EQ(o.final_text, "answer 1");
}

TEST(Decider, TieAtCapPicksImmediately) {
  Panel p;
  p.votes = [](int agent, int) { return std::to_string(agent); };
  auto gw = p.gateway();
  auto s = fresh();
  const auto o = debate(s, gw, voting(ProtocolKind::SimpleVoting, 3));
  EXPECT_EQ(o.decided_at_turn, 3);
  EXPECT_EQ(o.tie_broken, TieBreak::DeterministicIndex);
  EXPECT_EQ(p.vote_calls, 3);
}

TEST(Judge, PassThroughAndSynthesis) {
  Panel p;
  auto gw = p.gateway();
  auto s = fresh();
  run_turn(ParadigmKind::Memory, s, gw, {});
  p.judge = [](const ChatRequest& r) {
    EXPECT_NE(r.content(Role::User).find("Solution 2: second"), std::string::npos);
    return std::string("second");
  };
  auto o = judge_decide(s, {"first", "second"}, gw, {});
  EXPECT_EQ(o.final_text, "second");
  EXPECT_TRUE(o.success);
  EXPECT_EQ(s.transcript.back().agent_id, 0);
  EXPECT_EQ(s.transcript.back().phase, Phase::Judge);
  p.judge = [](const ChatRequest&) { return std::string("something new"); };
  EXPECT_EQ(judge_decide(s, {"first", "second"}, gw, {}).final_text, "something new");
  EXPECT_THROW(judge_decide(s, {}, gw, {}), PreconditionViolation);
}

TEST(Judge, GatewayErrorFallsBackToFirstCandidate) {
  auto gw = agora::testing::gateway_for(std::make_shared<FnBackend>([](const ChatRequest&) -> ChatResponse {
    throw AuthRejected("no");
  }));
  auto s = fresh();
  const auto o = judge_decide(s, {"first", "second"}, gw, {});
  EXPECT_FALSE(o.success);
  EXPECT_EQ(o.final_text, "first");
  EXPECT_FALSE(o.fallback_reason.empty());
}

TEST(Decider, JudgeRunsAtDueTurn) {
  Panel p;
  auto gw = p.gateway();
  auto s = fresh();
  const auto o = debate(s, gw, voting(ProtocolKind::Judge));
  EXPECT_EQ(o.decided_at_turn, 3);
  EXPECT_EQ(o.final_text, "judged");
  EXPECT_EQ(o.candidates.size(), 3u);
}
