#include "infoseek/clients/mock.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"
#include "infoseek/rollout/react.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

namespace infoseek::rollout {
namespace {

using clients::ChatResponse;
using clients::MockFetch;
using clients::MockSearch;
using clients::MockWorld;
using clients::ScriptedChat;

clients::RetryPolicy no_sleep()
{
    clients::RetryPolicy policy;
    policy.sleep = [](std::chrono::milliseconds) {};
    return policy;
}

std::size_t count(std::string_view text, std::string_view needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string_view::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

std::string joined(const std::vector<clients::ChatMessage>& messages)
{
    std::string out;
    for (const auto& message : messages)
        out += message.role + ": " + message.content + "\n";
    return out;
}

core::QAPair question()
{
    core::QAPair qa;
    qa.id = "q-1";
    qa.question = "Who founded X-Corp?";
    qa.answer = "Alice";
    return qa;
}

class RolloutFixture : public ::testing::Test {
protected:
    RolloutFixture()
    {
        world_.add_page({"https://news.example/alice", "Alice profile", "Alice founded X-Corp in 1990.", {}, 2005});
        world_.index("x-corp founder", {"https://news.example/alice"});
        search_ = std::make_unique<MockSearch>(world_);
        fetch_ = std::make_unique<MockFetch>(world_);
        summarizer_ = ScriptedChat::of(std::vector<std::string>(
            8, R"({"evidence": "Alice founded X-Corp in 1990.", "summary": "X-Corp was founded by Alice."})"));
        clients::VisitConfig visit_config;
        visit_config.retry = no_sleep();
        tools_.add(std::make_unique<SearchTool>(*search_, no_sleep()));
        tools_.add(std::make_unique<VisitTool>(*fetch_, *summarizer_, visit_config));
        config_.retry = no_sleep();
        config_.model_id = "mock-agent";
    }

    MockWorld world_;
    std::unique_ptr<MockSearch> search_;
    std::unique_ptr<MockFetch> fetch_;
    std::unique_ptr<ScriptedChat> summarizer_;
    ToolRegistry tools_;
    RolloutConfig config_;
};

const std::string kSearchTurn =
    "Thought: I should search for the founder.\nAction: search\nAction Input: {\"query\": \"x-corp founder\"}";
const std::string kVisitTurn = "Thought: Open the profile.\nAction: visit\nAction Input: {\"goal\": \"founder of "
                               "X-Corp\", \"url_link\": \"https://news.example/alice\"}";
const std::string kAnswerTurn = "Thought: The profile says Alice.\nFinal Answer: Alice";

TEST(ParsePromptTurn, ActionAndAnswer)
{
    auto turn = parse_prompt_turn(kSearchTurn + "\nObservation: {\"results\": []}\nThought: made up");
    ASSERT_TRUE(turn) << turn.error();
    EXPECT_EQ(turn->thought, "I should search for the founder.");
    EXPECT_EQ(turn->action, core::ActionCall::search("x-corp founder"));

    auto answer = parse_prompt_turn("Question: q\nThought: done\nFinal Answer:  Alice \n");
    ASSERT_TRUE(answer);
    EXPECT_EQ(answer->thought, "done");
    EXPECT_EQ(answer->action, core::ActionCall::answer("Alice"));

    auto fenced = parse_prompt_turn("Action: `search`\nAction Input: ```json\n{\"query\": \"q\", \"filter_year\": "
                                    "2020}\n```");
    ASSERT_TRUE(fenced) << fenced.error();
    EXPECT_EQ(fenced->thought, "");
    EXPECT_EQ(fenced->action, core::ActionCall::search("q", 2020));
}

TEST(ParsePromptTurn, Failures)
{
    for (const auto* text : {"I will just think.", "Action: search", "Action: search\nAction Input: {bad",
                             "Action: calculator\nAction Input: {\"x\": 1}",
                             "Action: search\nAction Input: {\"query\": \"q\", \"extra\": 1}",
                             "Action: visit\nAction Input: {\"goal\": \"g\", \"url_link\": \"/rel\"}",
                             "Action: answer\nAction Input: {\"final_answer\": \"a\"}", "Final Answer:   "}) {
        EXPECT_FALSE(parse_prompt_turn(text)) << text;
    }
}

TEST(ParseTaggedTurn, ActionAndAnswer)
{
    auto turn = parse_tagged_turn(
        "<think>look</think>\n<tool_call>{\"name\": \"search\", \"arguments\": {\"query\": \"q\"}}</tool_call>"
        "<tool_response>{\"results\": []}</tool_response>");
    ASSERT_TRUE(turn) << turn.error();
    EXPECT_EQ(turn->thought, "look");
    EXPECT_EQ(turn->action, core::ActionCall::search("q"));

    auto answer = parse_tagged_turn("<think>ok</think><answer>42</answer>");
    ASSERT_TRUE(answer);
    EXPECT_EQ(answer->action, core::ActionCall::answer("42"));

    EXPECT_FALSE(parse_tagged_turn("<think>unclosed"));
    EXPECT_FALSE(parse_tagged_turn("<think>t</think><tool_call>{bad</tool_call>"));
    EXPECT_FALSE(parse_tagged_turn("<think>t</think><tool_call>{\"name\": \"calc\", \"arguments\": {}}</tool_call>"));
    EXPECT_FALSE(parse_tagged_turn("<think>t</think>"));
}

TEST_F(RolloutFixture, ContextWithEmptyHistory)
{
    const auto messages = build_context(question(), {}, core::CotMode::short_cot, CompletionFormat::prompt, tools_);
    ASSERT_EQ(messages.size(), 1u);
    EXPECT_NE(messages[0].content.find("Who founded X-Corp?"), std::string::npos);
    EXPECT_NE(messages[0].content.find("- search:"), std::string::npos);
    EXPECT_NE(messages[0].content.find("- visit:"), std::string::npos);
    EXPECT_NE(messages[0].content.find("[search, visit]"), std::string::npos);
}

std::vector<core::Step> two_steps()
{
    return {core::Step{"first thought alpha", core::ActionCall::search("x-corp founder"), core::SearchObservation{}},
            core::Step{"second thought beta", core::ActionCall::visit("g", "https://news.example/alice"),
                       core::VisitObservation{"e", "s"}}};
}

TEST_F(RolloutFixture, LongModeDropsThoughts)
{
    for (auto format : {CompletionFormat::prompt, CompletionFormat::tagged}) {
        const auto text = joined(build_context(question(), two_steps(), core::CotMode::long_cot, format, tools_));
        EXPECT_EQ(count(text, "first thought alpha"), 0u);
        EXPECT_EQ(count(text, "second thought beta"), 0u);
        EXPECT_EQ(count(text, "x-corp founder"), 1u);
        EXPECT_NE(text.find("Continue."), std::string::npos);
    }
}

TEST_F(RolloutFixture, ShortModeKeepsThoughtsInOrder)
{
    const auto messages =
        build_context(question(), two_steps(), core::CotMode::short_cot, CompletionFormat::prompt, tools_);
    ASSERT_EQ(messages.size(), 5u);
    EXPECT_EQ(messages[1].role, "assistant");
    EXPECT_EQ(messages[2].role, "user");
    const auto text = joined(messages);
    const auto first = text.find("first thought alpha");
    const auto second = text.find("second thought beta");
    ASSERT_NE(first, std::string::npos);
    ASSERT_NE(second, std::string::npos);
    EXPECT_LT(first, second);
    // The closing instruction follows the last observation.
    EXPECT_TRUE(messages.back().content.ends_with("or the Final Answer."));
}

TEST_F(RolloutFixture, LongModeLeakageProperty)
{
    testing::Rng rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        auto trajectory = testing::random_trajectory(rng);
        trajectory.steps.pop_back();
        for (std::size_t i = 0; i < trajectory.steps.size(); ++i)
            trajectory.steps[i].thought += " ~marker-" + std::to_string(trial) + "-" + std::to_string(i) + "~";
        for (auto format : {CompletionFormat::prompt, CompletionFormat::tagged}) {
            // Every prefix is a context some round actually renders.
            for (std::size_t k = 0; k <= trajectory.steps.size(); ++k) {
                const std::vector<core::Step> history(trajectory.steps.begin(), trajectory.steps.begin() + k);
                const auto long_text = joined(build_context(question(), history, core::CotMode::long_cot, format, tools_));
                const auto short_text =
                    joined(build_context(question(), history, core::CotMode::short_cot, format, tools_));
                std::size_t last = 0;
                for (const auto& step : history) {
                    EXPECT_EQ(long_text.find(step.thought), std::string::npos);
                    const auto at = short_text.find(step.thought, last);
                    ASSERT_NE(at, std::string::npos);
                    last = at;
                }
            }
        }
    }
}

TEST_F(RolloutFixture, SearchVisitAnswer)
{
    auto agent = ScriptedChat::of({kSearchTurn, kVisitTurn, kAnswerTurn});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_TRUE(result) << result.error().detail;
    const auto& steps = result->steps;
    ASSERT_EQ(steps.size(), 3u);
    EXPECT_TRUE(steps[0].observation.has_value());
    EXPECT_TRUE(steps[1].observation.has_value());
    EXPECT_FALSE(steps[2].observation.has_value());
    EXPECT_EQ(std::get<core::SearchObservation>(*steps[0].observation).results.size(), 1u);
    EXPECT_EQ(std::get<core::VisitObservation>(*steps[1].observation).summary, "X-Corp was founded by Alice.");
    EXPECT_EQ(result->final_answer().final_answer, "Alice");
    EXPECT_EQ(result->qa_id, "q-1");
    EXPECT_EQ(result->sampler_meta.model_id, "mock-agent");
    EXPECT_FALSE(core::validate(*result, config_.rejection_budget).has_value());

    // The third request replays both earlier rounds.
    const auto third = agent->requests().at(2);
    EXPECT_EQ(third.messages.size(), 5u);
    EXPECT_DOUBLE_EQ(third.sampling.repetition_penalty, 1.1);
    EXPECT_EQ(third.model, "mock-agent");
}

TEST_F(RolloutFixture, ImmediateAnswer)
{
    auto agent = ScriptedChat::of({kAnswerTurn});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_TRUE(result);
    EXPECT_EQ(result->steps.size(), 1u);
}

TEST_F(RolloutFixture, NeverAnswersHitsRoundCap)
{
    auto agent = ScriptedChat::of(std::vector<std::string>(10, kSearchTurn));
    config_.sampling.max_rounds = 4;
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_FALSE(result);
    EXPECT_EQ(result.error().kind, RolloutFailureKind::no_answer);
    EXPECT_EQ(result.error().rounds, 4);
    EXPECT_EQ(agent->consumed(), 4u);
}

TEST_F(RolloutFixture, UnparseableCompletionIsFormatFailure)
{
    auto agent = ScriptedChat::of({kSearchTurn, "I am confused."});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_FALSE(result);
    EXPECT_EQ(result.error().kind, RolloutFailureKind::format);
    EXPECT_EQ(result.error().rounds, 2);
    EXPECT_NE(result.error().transcript.find("I am confused."), std::string::npos);
    EXPECT_NE(result.error().transcript.find("Observation:"), std::string::npos);
}

TEST_F(RolloutFixture, BackendExhaustionIsBackendFailure)
{
    auto agent = ScriptedChat::of({kSearchTurn});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_FALSE(result);
    EXPECT_EQ(result.error().kind, RolloutFailureKind::backend);
}

TEST_F(RolloutFixture, ToolErrorsBecomeObservations)
{
    auto agent = ScriptedChat::of(
        {"Thought: try it\nAction: visit\nAction Input: {\"goal\": \"g\", \"url_link\": \"https://news.example/gone\"}",
         kAnswerTurn});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_TRUE(result);
    ASSERT_EQ(result->steps.size(), 2u);
    EXPECT_TRUE(core::is_tool_error(*result->steps[0].observation));
    // The error is shown to the model in the next round.
    EXPECT_NE(agent->requests().at(1).messages.back().content.find("TOOL ERROR: HTTP 404"), std::string::npos);
}

TEST_F(RolloutFixture, UnregisteredToolIsToolError)
{
    ToolRegistry search_only;
    search_only.add(std::make_unique<SearchTool>(*search_, no_sleep()));
    auto agent = ScriptedChat::of({kVisitTurn, kAnswerTurn});
    const auto result = run_react(question(), *agent, search_only, config_);
    ASSERT_TRUE(result);
    EXPECT_TRUE(core::is_tool_error(*result->steps[0].observation));
    EXPECT_THROW(search_only.execute(core::ActionCall::search("")), std::invalid_argument);
    EXPECT_THROW(search_only.execute(core::ActionCall::answer("a")), std::invalid_argument);
}

TEST_F(RolloutFixture, LongModeRecordsReasoningChannel)
{
    config_.cot_mode = core::CotMode::long_cot;
    ScriptedChat agent({ChatResponse{"Action: search\nAction Input: {\"query\": \"x-corp founder\"}",
                                     "hidden reasoning one", "stop"},
                        ChatResponse{"Visible reason.\nAction: visit\nAction Input: {\"goal\": \"g\", \"url_link\": "
                                     "\"https://news.example/alice\"}",
                                     std::nullopt, "stop"},
                        ChatResponse{"Final Answer: Alice", "hidden reasoning three", "stop"}});
    const auto result = run_react(question(), agent, tools_, config_);
    ASSERT_TRUE(result) << result.error().detail;
    EXPECT_EQ(result->steps[0].thought, "hidden reasoning one");
    EXPECT_EQ(result->steps[1].thought, "Visible reason.");
    EXPECT_EQ(result->steps[2].thought, "hidden reasoning three");
    EXPECT_EQ(result->sampler_meta.fallback_thought_steps, std::vector<std::size_t>{1});
    EXPECT_EQ(result->cot_mode, core::CotMode::long_cot);
    for (const auto& request : agent.requests())
        EXPECT_EQ(joined(request.messages).find("hidden reasoning"), std::string::npos);
    // Long mode uses the action-only prompt.
    EXPECT_EQ(agent.requests()[0].messages[0].content.find("Thought:"), std::string::npos);
}

TEST_F(RolloutFixture, ShortModePrefersReasoningChannelWithoutFlag)
{
    ScriptedChat agent({ChatResponse{kAnswerTurn, "from the channel", "stop"}});
    const auto result = run_react(question(), agent, tools_, config_);
    ASSERT_TRUE(result);
    EXPECT_EQ(result->steps[0].thought, "from the channel");
    EXPECT_TRUE(result->sampler_meta.fallback_thought_steps.empty());
}

TEST_F(RolloutFixture, TaggedFormatEpisode)
{
    config_.format = CompletionFormat::tagged;
    auto agent = ScriptedChat::of(
        {"<think>search first</think><tool_call>{\"name\": \"search\", \"arguments\": {\"query\": \"x-corp "
         "founder\"}}</tool_call>",
         "<think>found</think><answer>Alice</answer>"});
    const auto result = run_react(question(), *agent, tools_, config_);
    ASSERT_TRUE(result) << result.error().detail;
    EXPECT_EQ(result->steps.size(), 2u);
    const auto second = agent->requests().at(1).messages;
    EXPECT_TRUE(second.at(2).content.starts_with("<tool_response>"));
    EXPECT_EQ(second.at(1).content.rfind("<think>search first</think><tool_call>", 0), 0u);
}

TEST_F(RolloutFixture, UnserializableThoughtIsFormatFailure)
{
    ScriptedChat agent({ChatResponse{kAnswerTurn, "bad </think> thought", "stop"}});
    const auto result = run_react(question(), agent, tools_, config_);
    ASSERT_FALSE(result);
    EXPECT_EQ(result.error().kind, RolloutFailureKind::format);
}

Acceptor correct_only()
{
    return [](const core::QAPair& qa, const core::Trajectory& t) -> std::optional<std::string> {
        if (t.final_answer().final_answer == qa.answer)
            return std::nullopt;
        return "wrong answer";
    };
}

TEST_F(RolloutFixture, RejectSampleAcceptsFirst)
{
    auto agent = ScriptedChat::of({kAnswerTurn});
    const auto result = reject_sample(question(), *agent, tools_, config_, accept_any());
    ASSERT_TRUE(result.accepted);
    ASSERT_EQ(result.attempts.size(), 1u);
    EXPECT_EQ(result.accepted->sampler_meta.attempt_index, 1);
    EXPECT_EQ(result.attempts[0].status, AttemptStatus::accepted);
    EXPECT_EQ(result.attempts[0].raw, core::serialize_tagged(*result.accepted));
}

TEST_F(RolloutFixture, RejectSampleCorrectOnThirdAttempt)
{
    auto agent = ScriptedChat::of({"Final Answer: Bob", "Final Answer: Carol", kSearchTurn, kAnswerTurn});
    const auto result = reject_sample(question(), *agent, tools_, config_, correct_only());
    ASSERT_TRUE(result.accepted);
    ASSERT_EQ(result.attempts.size(), 3u);
    EXPECT_EQ(result.accepted->sampler_meta.attempt_index, 3);
    EXPECT_EQ(result.attempts[0].status, AttemptStatus::rejected);
    EXPECT_EQ(result.attempts[0].reason, "wrong answer");
    EXPECT_EQ(result.attempts[1].attempt_index, 2);
    EXPECT_EQ(result.attempts[2].status, AttemptStatus::accepted);
}

TEST_F(RolloutFixture, RejectSampleBudgetOfFive)
{
    auto agent = ScriptedChat::of(std::vector<std::string>(20, "Final Answer: Bob"));
    const auto result = reject_sample(question(), *agent, tools_, config_, correct_only());
    EXPECT_FALSE(result.accepted);
    ASSERT_EQ(result.attempts.size(), 5u);
    EXPECT_EQ(agent->consumed(), 5u);
    for (int i = 0; i < 5; ++i)
        EXPECT_EQ(result.attempts[static_cast<std::size_t>(i)].attempt_index, i + 1);
}

TEST_F(RolloutFixture, FailedAttemptsAreRecorded)
{
    auto agent = ScriptedChat::of({"garbage", kAnswerTurn});
    const auto result = reject_sample(question(), *agent, tools_, config_, accept_any());
    ASSERT_EQ(result.attempts.size(), 2u);
    EXPECT_EQ(result.attempts[0].status, AttemptStatus::failed);
    EXPECT_TRUE(result.attempts[0].reason.starts_with("format:"));
    EXPECT_EQ(result.attempts[0].raw, "garbage\n");
    EXPECT_EQ(result.accepted->sampler_meta.attempt_index, 2);
}

TEST_F(RolloutFixture, TerminationAndAttemptBoundProperty)
{
    testing::Rng rng(99);
    const std::vector<std::string> turns{kSearchTurn, kVisitTurn, kAnswerTurn, "Final Answer: Bob", "noise",
                                         "Action: search\nAction Input: {}"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::string> script;
        for (int i = 0; i < 200; ++i)
            script.push_back(turns[rng() % turns.size()]);
        auto agent = ScriptedChat::of(script);
        auto config = config_;
        config.sampling.max_rounds = 1 + static_cast<int>(rng() % 6);
        config.rejection_budget = 1 + static_cast<int>(rng() % 5);
        const auto result = reject_sample(question(), *agent, tools_, config, correct_only());
        EXPECT_LE(result.attempts.size(), static_cast<std::size_t>(config.rejection_budget));
        EXPECT_LE(agent->consumed(),
                  static_cast<std::size_t>(config.rejection_budget * config.sampling.max_rounds));
        for (const auto& attempt : result.attempts)
            EXPECT_LE(attempt.rounds, config.sampling.max_rounds);
        if (result.accepted) {
            EXPECT_FALSE(core::validate(*result.accepted, config.rejection_budget).has_value());
            // Every executed action passed schema validation.
            for (const auto& step : result.accepted->steps)
                EXPECT_FALSE(core::validate(step.action).has_value());
        }
    }
}

TEST_F(RolloutFixture, RejectSampleAllKeepsInputOrder)
{
    std::vector<core::QAPair> qas;
    for (int i = 0; i < 6; ++i) {
        auto qa = question();
        qa.id = "q-" + std::to_string(i);
        qas.push_back(qa);
    }
    clients::FunctionChat agent([](const clients::ChatRequest&) { return ChatResponse{kAnswerTurn, {}, "stop"}; });
    const auto results = reject_sample_all(qas, agent, tools_, config_, accept_any(), 3);
    ASSERT_EQ(results.size(), 6u);
    for (int i = 0; i < 6; ++i)
        EXPECT_EQ(results[static_cast<std::size_t>(i)].accepted->qa_id, "q-" + std::to_string(i));
}

TEST(PromptTranscript, RoundTripProperty)
{
    testing::Rng rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        auto trajectory = testing::random_trajectory(rng);
        for (auto& step : trajectory.steps) {
            step.thought = std::string(core::trim(step.thought));
            if (auto* answer = std::get_if<core::AnswerArgs>(&step.action.args))
                answer->final_answer = std::string(core::trim(answer->final_answer));
        }
        const auto text = render_prompt_transcript(trajectory.steps);
        const auto parsed = parse_prompt_transcript(text);
        ASSERT_TRUE(parsed) << parsed.error() << "\n" << text;
        EXPECT_EQ(parsed->steps, trajectory.steps) << text;
    }
}

TEST(PromptTranscript, Failures)
{
    EXPECT_FALSE(parse_prompt_transcript(kSearchTurn));
    EXPECT_FALSE(parse_prompt_transcript(kSearchTurn + "\nObservation: {not json"));
    EXPECT_FALSE(parse_prompt_transcript(kSearchTurn + "\nObservation: {\"results\": []}"));
    EXPECT_FALSE(parse_prompt_transcript(kAnswerTurn + "\nObservation: {}"));
    EXPECT_FALSE(parse_prompt_transcript(kSearchTurn + "\nObservation: {\"evidence\": \"e\", \"summary\": \"s\"}\n" +
                                         kAnswerTurn));
    EXPECT_TRUE(parse_prompt_transcript(kSearchTurn + "\nObservation: {\"results\": []}\n" + kAnswerTurn));
}

TEST(AttemptRecord, JsonRoundTrip)
{
    RolloutAttempt attempt{"q", 2, AttemptStatus::rejected, "wrong", "<think>t</think><answer>a</answer>", 1,
                           core::CotMode::long_cot, core::SamplerMeta{"m", 2, {}, {0}}};
    const auto back = attempt_from_json(nlohmann::json::parse(attempt_to_json(attempt).dump()));
    EXPECT_EQ(back.qa_id, "q");
    EXPECT_EQ(back.status, AttemptStatus::rejected);
    EXPECT_EQ(back.raw, attempt.raw);
    EXPECT_EQ(back.cot_mode, core::CotMode::long_cot);
    EXPECT_EQ(back.sampler_meta, attempt.sampler_meta);
    EXPECT_THROW(attempt_from_json(nlohmann::json{{"qa_id", "q"}}), core::SchemaError);
}

TEST(RolloutConfig, Validation)
{
    RolloutConfig config;
    EXPECT_NO_THROW(validate(config));
    config.rejection_budget = 0;
    EXPECT_THROW(validate(config), std::invalid_argument);
    config.rejection_budget = 5;
    config.sampling.top_p = 0;
    EXPECT_THROW(validate(config), std::invalid_argument);
}

} // namespace
} // namespace infoseek::rollout
