#include <random>

#include <gtest/gtest.h>

#include "agora/paradigms.hpp"
#include "support/test_support.hpp"

using namespace agora;
using agora::testing::FnBackend;
using agora::testing::reply;

namespace {

DebateState panel_state(int n) {
  return make_debate_state(agora::testing::mc_task(), build_panel(PersonaGeneratorKind::None, n, ResponseGeneratorKind::Simple,
                                                           agora::testing::mc_task(),
                                                           Gateway(nullptr, GatewayOptions{}), {}));
}

void push(DebateState& s, int agent, Phase phase, int turn) {
  Message m;
  m.seq = next_seq(s);
  m.turn = turn;
  m.agent_id = agent;
  m.phase = phase;
  m.text = "msg" + std::to_string(m.seq);
  m.proposal = phase == Phase::Draft;
  append_message(s, m);
}

std::vector<std::int64_t> seqs(const std::vector<Message>& ms) {
  std::vector<std::int64_t> out;
  for (const auto& m : ms) out.push_back(m.seq);
  return out;
}

Gateway agreeing_gateway(std::shared_ptr<FnBackend>* out = nullptr) {
  auto backend = std::make_shared<FnBackend>([](const ChatRequest&) { return reply("[AGREE] FINAL SOLUTION: B", 10); });
  if (out) *out = backend;
  return agora::testing::gateway_for(backend);
}

}  // namespace

TEST(Schedule, Memory) {
  const auto s = schedule(ParadigmKind::Memory, 3, 1);
  ASSERT_EQ(s.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(s[i].speaker, i + 1);
    EXPECT_EQ(s[i].phase, StepPhase::Improve);
    EXPECT_EQ(s[i].visibility, Visibility::All);
  }
}

TEST(Schedule, RelayIsCyclicEveryTurn) {
  for (int n = 2; n <= 8; ++n)
    for (int t = 1; t <= 5; ++t) {
      const auto s = schedule(ParadigmKind::Relay, n, t);
      ASSERT_EQ(static_cast<int>(s.size()), n);
      for (int i = 0; i < n; ++i) {
        EXPECT_EQ(s[i].speaker, i + 1);
        EXPECT_EQ(s[i].visibility, Visibility::LastMessageOnly);
      }
    }
}

TEST(Schedule, ReportShape) {
  const auto s = schedule(ParadigmKind::Report, 4, 1);
  ASSERT_EQ(s.size(), 4u);
  EXPECT_EQ(s[0].speaker, 2);
  EXPECT_EQ(s[0].visibility, Visibility::OwnAndCentral);
  EXPECT_EQ(s.back().speaker, 1);
  EXPECT_EQ(s.back().phase, StepPhase::CentralSynthesis);
}

TEST(Schedule, DebatePairsAlternate) {
  const auto s = schedule(ParadigmKind::Debate, 5, 1);
  // (2,3) x2, (4,5) x2, central
  ASSERT_EQ(s.size(), 5u);
  EXPECT_EQ(s[0].speaker, 2);
  EXPECT_EQ(s[1].speaker, 3);
  EXPECT_EQ(s[2].speaker, 4);
  EXPECT_EQ(s[3].speaker, 5);
  EXPECT_EQ(s[0].group, (std::vector<int>{2, 3}));
  EXPECT_EQ(s[0].phase, StepPhase::Feedback);
  EXPECT_EQ(s[0].visibility, Visibility::PairOnly);
  EXPECT_EQ(s[4].phase, StepPhase::CentralSynthesis);

  const auto odd = schedule(ParadigmKind::Debate, 4, 1, 3);
  ASSERT_EQ(odd.size(), 5u);  // (2,3,2), 4 alone, central
  EXPECT_EQ(odd[2].speaker, 2);
  EXPECT_EQ(odd[3].group, (std::vector<int>{4}));
}

TEST(Schedule, CentralSynthesisOnlyForCentralAgent) {
  for (auto kind : {ParadigmKind::Memory, ParadigmKind::Relay, ParadigmKind::Report, ParadigmKind::Debate})
    for (int n = 3; n <= 9; ++n)
      for (const auto& step : schedule(kind, n, 1))
        if (step.phase == StepPhase::CentralSynthesis) EXPECT_EQ(step.speaker, kCentralAgent);
}

TEST(Schedule, PanelTooSmall) {
  EXPECT_THROW(schedule(ParadigmKind::Report, 2, 1), PanelTooSmall);
  EXPECT_THROW(schedule(ParadigmKind::Debate, 2, 1), PanelTooSmall);
  EXPECT_THROW(schedule(ParadigmKind::Memory, 1, 1), PanelTooSmall);
  EXPECT_NO_THROW(schedule(ParadigmKind::Relay, 2, 1));
}

TEST(Visible, RelaySeesOnlyLastMessage) {
  auto s = panel_state(3);
  push(s, 1, Phase::Draft, 1);
  for (int i = 0; i < 4; ++i) push(s, 1 + (i + 1) % 3, Phase::Improve, 1);
  const auto v = visible_messages(ParadigmKind::Relay, s, {1, StepPhase::Improve, Visibility::LastMessageOnly, {}});
  EXPECT_EQ(seqs(v), (std::vector<std::int64_t>{5}));
  EXPECT_TRUE(visible_messages(ParadigmKind::Relay, panel_state(3), {1, StepPhase::Improve, Visibility::LastMessageOnly, {}})
                  .empty());
}

TEST(Visible, MemorySeesEverything) {
  auto s = panel_state(3);
  push(s, 1, Phase::Draft, 1);
  for (int i = 0; i < 4; ++i) push(s, 1 + (i + 1) % 3, Phase::Improve, 1);
  const auto v = visible_messages(ParadigmKind::Memory, s, {2, StepPhase::Improve, Visibility::All, {}});
  EXPECT_EQ(seqs(v), (std::vector<std::int64_t>{1, 2, 3, 4, 5}));
}

TEST(Visible, DecisionTrafficHidden) {
  auto s = panel_state(3);
  push(s, 1, Phase::Draft, 1);
  push(s, 2, Phase::Vote, 1);
  push(s, 3, Phase::Extraction, 1);
  EXPECT_EQ(seqs(visible_messages(ParadigmKind::Memory, s, {2, StepPhase::Improve, Visibility::All, {}})),
            (std::vector<std::int64_t>{1}));
  EXPECT_EQ(seqs(visible_messages(ParadigmKind::Relay, s, {2, StepPhase::Improve, Visibility::LastMessageOnly, {}})),
            (std::vector<std::int64_t>{1}));
}

TEST(Visible, ReportPeerDoesNotSeeOtherPeer) {
  auto s = panel_state(3);
  push(s, 2, Phase::Improve, 1);
  const auto v = visible_messages(ParadigmKind::Report, s, {3, StepPhase::Improve, Visibility::OwnAndCentral, {}});
  EXPECT_TRUE(v.empty());
  push(s, 3, Phase::Improve, 1);
  push(s, 1, Phase::CentralSynthesis, 1);
  s.turn = 1;
  EXPECT_EQ(seqs(visible_messages(ParadigmKind::Report, s, {3, StepPhase::Improve, Visibility::OwnAndCentral, {}})),
            (std::vector<std::int64_t>{2, 3}));
}

TEST(Visible, DebatePairSeesOnlyThisTurnsPairTraffic) {
  auto s = panel_state(5);
  push(s, 2, Phase::Feedback, 1);
  push(s, 3, Phase::Feedback, 1);
  push(s, 4, Phase::Feedback, 1);
  push(s, 1, Phase::CentralSynthesis, 1);
  s.turn = 1;
  push(s, 2, Phase::Feedback, 2);
  const TurnStep step{3, StepPhase::Feedback, Visibility::PairOnly, {2, 3}};
  EXPECT_EQ(seqs(visible_messages(ParadigmKind::Debate, s, step)), (std::vector<std::int64_t>{4, 5}));
}

TEST(RunTurn, MemoryAddsOneMessagePerAgent) {
  auto s = panel_state(3);
  run_turn(ParadigmKind::Memory, s, agreeing_gateway(), {});
  ASSERT_EQ(s.transcript.size(), 3u);
  EXPECT_EQ(s.turn, 1);
  EXPECT_EQ(s.transcript[0].phase, Phase::Draft);
  EXPECT_TRUE(s.transcript[0].proposal);
  EXPECT_EQ(s.transcript[1].agreement, Agreement::Agree);
  EXPECT_EQ(agreement_fraction(s), Rational(1));
}

TEST(RunTurn, ReportEndsWithCentralSynthesis) {
  auto s = panel_state(3);
  run_turn(ParadigmKind::Report, s, agreeing_gateway(), {});
  ASSERT_EQ(s.transcript.size(), 3u);
  EXPECT_EQ(s.transcript.back().phase, Phase::CentralSynthesis);
  EXPECT_EQ(s.transcript.back().agent_id, 1);
  ASSERT_TRUE(s.current_draft);
  EXPECT_EQ(s.current_draft->author_id, 1);
}

TEST(RunTurn, ParallelReportMatchesSequential) {
  auto a = panel_state(5), b = panel_state(5);
  TurnOptions par;
  par.parallel_report_peers = true;
  for (int t = 0; t < 2; ++t) {
    run_turn(ParadigmKind::Report, a, agreeing_gateway(), {});
    run_turn(ParadigmKind::Report, b, agreeing_gateway(), par);
  }
  EXPECT_EQ(a, b);
}

TEST(RunTurn, CapAndEnded) {
  auto s = panel_state(3);
  TurnOptions o;
  o.max_turns = 1;
  run_turn(ParadigmKind::Memory, s, agreeing_gateway(), o);
  EXPECT_THROW(run_turn(ParadigmKind::Memory, s, agreeing_gateway(), o), PreconditionViolation);
  DecisionOutcome out;
  out.success = true;
  finish(s, out);
  EXPECT_THROW(run_turn(ParadigmKind::Memory, s, agreeing_gateway(), {}), DebateEnded);
}

TEST(RunTurn, DisagreementInstallsNewDraft) {
  auto backend = std::make_shared<FnBackend>([](const ChatRequest& r) {
    return reply(r.content(Role::System).find("Nobody proposed") != std::string::npos ? "first" : "[DISAGREE] better");
  });
  auto s = panel_state(3);
  run_turn(ParadigmKind::Memory, s, agora::testing::gateway_for(backend), {});
  ASSERT_TRUE(s.current_draft);
  EXPECT_EQ(s.current_draft->author_id, 3);
  EXPECT_EQ(agreement_fraction(s), Rational(1, 3));
}

TEST(RunTurn, CentralRevisesWhenAllPeersReject) {
  std::vector<std::string> central_prompts;
  auto backend = std::make_shared<FnBackend>([&](const ChatRequest& r) {
    if (r.content(Role::System).find("Your role: Participant 1") != std::string::npos) {
      central_prompts.push_back(r.content(Role::User));
      return reply("[AGREE] central");
    }
    return reply("[DISAGREE] no");
  });
  auto s = panel_state(3);
  auto gw = agora::testing::gateway_for(backend);
  run_turn(ParadigmKind::Report, s, gw, {});
  run_turn(ParadigmKind::Report, s, gw, {});
  ASSERT_EQ(central_prompts.size(), 2u);
  EXPECT_EQ(central_prompts[1], std::string(prompt_text("revise_simple")));
  EXPECT_TRUE(s.transcript.back().proposal);
}

TEST(RunTurn, ObserverSeesEveryStep) {
  auto s = panel_state(5);
  TurnOptions o;
  int calls = 0;
  o.observer = [&](const TurnStep&, const std::vector<Message>&, const ChatRequest&) { ++calls; };
  run_turn(ParadigmKind::Debate, s, agreeing_gateway(), o);
  EXPECT_EQ(calls, 5);
}
