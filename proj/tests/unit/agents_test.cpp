#include <gtest/gtest.h>

#include "agora/agents.hpp"
#include "agora/scripted_backend.hpp"
#include "support/test_support.hpp"

using namespace agora;
using agora::testing::FnBackend;
using agora::testing::reply;

namespace {

// Backend that hands out `outputs` in order, then fails.
std::shared_ptr<FnBackend> sequence(std::vector<std::string> outputs) {
  auto i = std::make_shared<std::size_t>(0);
  return std::make_shared<FnBackend>([outputs, i](const ChatRequest&) -> ChatResponse {
    if (*i >= outputs.size()) throw NoRuleMatched("sequence exhausted");
    return reply(outputs[(*i)++]);
  });
}

const LlmSettings kLlm{"m", {}};

std::string ipip_json(const std::string& role, const std::string& level, const std::string& openness = "high") {
  return R"({"role": ")" + role + R"(", "traits": {"Extraversion": ")" + level + R"(", "Agreeableness": "average",
    "Conscientiousness": "high", "Neuroticism": "low", "Openness": ")" + openness + R"("}})";
}

}  // namespace

TEST(NeutralPanel, NamesParticipants) {
  const auto p = neutral_panel(3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].name, "Participant 1");
  EXPECT_EQ(p[2].name, "Participant 3");
  EXPECT_EQ(p[1].description, "");
  EXPECT_FALSE(p[1].traits);
  EXPECT_EQ(neutral_panel(1).size(), 1u);
  EXPECT_THROW(neutral_panel(0), PreconditionViolation);
}

TEST(ExpertPersona, ParsesRoleAndDescription) {
  auto gw = agora::testing::gateway_for(sequence({R"(Sure! {"role":"Chef","description":"Expert in cooking"})"}));
  const auto p = generate_expert_persona("Cook pasta", {}, gw, kLlm);
  EXPECT_EQ(p.name, "Chef");
  EXPECT_EQ(p.description, "Expert in cooking");
  EXPECT_FALSE(p.traits);
}

TEST(ExpertPersona, ThreeParseFailuresRaise) {
  auto backend = sequence({"not json", "not json", "not json"});
  auto gw = agora::testing::gateway_for(backend);
  EXPECT_THROW(generate_expert_persona("t", {}, gw, kLlm), PersonaParseFailure);
  EXPECT_EQ(backend->requests().size(), 3u);
}

TEST(ExpertPersona, DuplicateRoleReprompted) {
  auto backend = sequence({R"({"role":"chef","description":"again"})", R"({"role":"Educator","description":"Teaches"})"});
  auto gw = agora::testing::gateway_for(backend);
  PersonaCallLog log;
  const auto p = generate_expert_persona("t", {{"Chef", "Expert in cooking", std::nullopt}}, gw, kLlm, {}, &log);
  EXPECT_EQ(p.name, "Educator");
  EXPECT_EQ(log.size(), 2u);
  EXPECT_NE(backend->requests()[0].content(Role::User).find("Chef"), std::string::npos);
}

TEST(ExpertPersona, PersistentDuplicateRaisesUniqueness) {
  auto gw = agora::testing::gateway_for(sequence(std::vector<std::string>(3, R"({"role":"Chef","description":"x"})")));
  EXPECT_THROW(generate_expert_persona("t", {{"Chef", "", std::nullopt}}, gw, kLlm), PersonaUniquenessFailure);
}

TEST(IpipPersona, AcceptsAllFiveTraits) {
  auto gw = agora::testing::gateway_for(sequence({ipip_json("Analyst", "Very Low")}));
  const auto p = generate_ipip_persona("t", {}, gw, kLlm);
  EXPECT_EQ(p.name, "Analyst");
  ASSERT_TRUE(p.traits);
  EXPECT_EQ(p.traits->size(), 5u);
  EXPECT_EQ(p.traits->at("Extraversion"), "very low");
  EXPECT_NE(p.description.find("Openness: high"), std::string::npos);
}

TEST(IpipPersona, OutOfRangeTrait) {
  auto gw = agora::testing::gateway_for(sequence(std::vector<std::string>(3, ipip_json("A", "extreme"))));
  EXPECT_THROW(generate_ipip_persona("t", {}, gw, kLlm), TraitOutOfRange);
}

TEST(IpipPersona, IdenticalTraitVectorRejected) {
  auto gw = agora::testing::gateway_for(sequence({ipip_json("A", "low"), ipip_json("B", "low"), ipip_json("C", "high")}));
  const auto first = generate_ipip_persona("t", {}, gw, kLlm);
  const auto second = generate_ipip_persona("t", {first}, gw, kLlm);
  EXPECT_EQ(second.name, "C");
  EXPECT_NE(*first.traits, *second.traits);
}

TEST(BuildPanel, GeneratedPersonasSeeEarlierOnes) {
  auto backend = sequence({R"({"role":"Chef","description":"a"})", R"({"role":"Baker","description":"b"})"});
  auto gw = agora::testing::gateway_for(backend);
  const auto panel = build_panel(PersonaGeneratorKind::Expert, 2, ResponseGeneratorKind::Critical,
                                 agora::testing::mc_task(), gw, kLlm);
  ASSERT_EQ(panel.size(), 2u);
  EXPECT_EQ(panel[1].agent_id, 2);
  EXPECT_EQ(panel[1].persona.name, "Baker");
  EXPECT_EQ(panel[0].response_generator, ResponseGeneratorKind::Critical);
  EXPECT_EQ(backend->requests()[0].content(Role::User).find("Already generated"), std::string::npos);
  EXPECT_NE(backend->requests()[1].content(Role::User).find("Chef"), std::string::npos);
}

TEST(DebateSystemPrompt, NoDraft) {
  AgentProfile a{1, {"Participant 1", "", std::nullopt}};
  const auto text = render_debate_system_prompt(a, agora::testing::mc_task(), std::nullopt, "");
  EXPECT_NE(text.find("Nobody proposed a solution yet."), std::string::npos);
  EXPECT_EQ(text.find("Current Solution:"), std::string::npos);
  EXPECT_EQ(text.find("Context:"), std::string::npos);
}

TEST(DebateSystemPrompt, WithDraftAndContext) {
  AgentProfile a{1, {"Chef", "Cooks", std::nullopt}};
  auto task = agora::testing::mc_task();
  task.context_lines = {"Some background."};
  const auto text = render_debate_system_prompt(a, task, SolutionDraft{"42", 1, 1}, "Chef: hi");
  EXPECT_NE(text.find("Current Solution: 42"), std::string::npos);
  EXPECT_NE(text.find("Context: Some background."), std::string::npos);
  EXPECT_NE(text.find("Your role: Chef (Cooks)"), std::string::npos);
  EXPECT_NE(text.find("Discussion so far: Chef: hi"), std::string::npos);
}

TEST(TurnUserPrompt, GeneratorWording) {
  auto improve = render_turn_user_prompt({TurnPhase::Improve, ResponseGeneratorKind::Simple, "", "d"});
  const std::string tail = "Let's think step-by-step.";
  ASSERT_GE(improve.size(), tail.size());
  EXPECT_EQ(improve.substr(improve.size() - tail.size()), tail);
  EXPECT_NE(render_turn_user_prompt({TurnPhase::Feedback, ResponseGeneratorKind::Critical, "", "d"})
                .find("If you believe the solution is flawless"),
            std::string::npos);
  EXPECT_NE(render_turn_user_prompt({TurnPhase::Improve, ResponseGeneratorKind::Reasoning, "", "d"})
                .find("Don't provide a final solution yet."),
            std::string::npos);
}

TEST(TurnUserPrompt, FirstDraftIffNoDraft) {
  EXPECT_THROW(render_turn_user_prompt({TurnPhase::FirstDraft, ResponseGeneratorKind::Simple, "", "d"}),
               PreconditionViolation);
  EXPECT_THROW(render_turn_user_prompt({TurnPhase::Improve, ResponseGeneratorKind::Simple, "", std::nullopt}),
               PreconditionViolation);
  EXPECT_NO_THROW(render_turn_user_prompt({TurnPhase::FirstDraft, ResponseGeneratorKind::Simple, "", std::nullopt}));
}

TEST(ParseAgreement, Examples) {
  EXPECT_EQ(parse_agreement("...I concur. [AGREE]"), Agreement::Agree);
  EXPECT_EQ(parse_agreement("[AGREE] but on reflection [DISAGREE] because"), Agreement::Disagree);
  EXPECT_EQ(parse_agreement("sounds fine"), Agreement::Unmarked);
  EXPECT_EQ(parse_agreement("[disagree] then [Agree]"), Agreement::Agree);
  EXPECT_EQ(parse_agreement("I agree"), Agreement::Unmarked);
}

TEST(Extraction, PassesThroughVerbatim) {
  AgentProfile a{1, {"Participant 1", "", std::nullopt}};
  auto backend = sequence({"B", "A long answer without a letter"});
  auto gw = agora::testing::gateway_for(backend);
  EXPECT_EQ(extract_final_answer(a, agora::testing::mc_task(), "So FINAL SOLUTION: B", gw, kLlm).text, "B");
  EXPECT_EQ(extract_final_answer(a, agora::testing::mc_task(), "A long answer without a letter", gw, kLlm).text,
            "A long answer without a letter");
  EXPECT_NE(backend->requests()[0].content(Role::User).find("So FINAL SOLUTION: B"), std::string::npos);
  EXPECT_THROW(extract_final_answer(a, agora::testing::mc_task(), "", gw, kLlm), PreconditionViolation);
}

TEST(Instructions, Registry) {
  EXPECT_FALSE(instruction_for("etpc").multiple_choice);
  EXPECT_EQ(instruction_for("etpc").text.find("FINAL SOLUTION"), std::string::npos);
  EXPECT_NE(instruction_for("mmlu").text.find("FINAL SOLUTION: <Letter>"), std::string::npos);
  EXPECT_THROW(instruction_for("nope"), UnknownTemplate);
}
