#include "infoseek/clients/mock.hpp"
#include "infoseek/eval/judge.hpp"
#include "infoseek/eval/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace infoseek::eval {
namespace {

RunOutcome outcome(std::string id, std::vector<bool> flags)
{
    RunOutcome out;
    out.qa_id = std::move(id);
    for (bool flag : flags)
        out.attempts.push_back({flag ? "right" : "wrong", flag});
    return out;
}

TEST(ParseVerdict, Forms)
{
    EXPECT_EQ(parse_verdict("extracted_final_answer: 3\nreasoning: fine\nverdict: CORRECT"), true);
    EXPECT_EQ(parse_verdict("reasoning: the response is correct in spirit but\nverdict: INCORRECT"), false);
    EXPECT_EQ(parse_verdict("**Verdict:** correct"), true);
    EXPECT_EQ(parse_verdict("INCORRECT"), false);
    EXPECT_EQ(parse_verdict("The answer is correct."), true);
    EXPECT_EQ(parse_verdict("I cannot tell."), std::nullopt);
    EXPECT_EQ(parse_verdict("Either correct or incorrect."), std::nullopt);
}

TEST(JudgeAnswer, ScriptedVerdicts)
{
    auto judge = clients::ScriptedChat::of({"verdict: CORRECT", "verdict: INCORRECT", "no idea"});
    EXPECT_TRUE(judge_answer("Who?", "Alice", "Alice", *judge));
    EXPECT_FALSE(judge_answer("Who?", "Bob", "Alice", *judge));
    EXPECT_THROW(judge_answer("Who?", "Bob", "Alice", *judge), JudgeError);
    const auto prompt = judge->requests()[0].messages[0].content;
    EXPECT_NE(prompt.find("[question]: Who?"), std::string::npos);
    EXPECT_NE(prompt.find("[response]: Alice"), std::string::npos);
    EXPECT_NE(prompt.find("[reference answer]: Alice"), std::string::npos);
}

TEST(JudgeAnswer, BackendFailurePropagates)
{
    auto inner = clients::ScriptedChat::of({});
    clients::RetryPolicy retry;
    retry.sleep = [](std::chrono::milliseconds) {};
    EXPECT_THROW(judge_answer("q", "a", "b", *inner, {"", {}, retry}), clients::TransportError);
}

TEST(ReferenceMatchJudge, ReadsTheRealPrompt)
{
    ReferenceMatchJudge judge;
    EXPECT_TRUE(judge_answer("What is the total?", "34689", "34689", judge));
    EXPECT_TRUE(judge_answer("q", "34,689", "34689", judge));
    EXPECT_TRUE(judge_answer("q", "The Eiffel Tower.", "eiffel tower", judge));
    EXPECT_FALSE(judge_answer("q", "34688", "34689", judge));
    EXPECT_FALSE(judge_answer("q", "", "x", judge));
    EXPECT_FALSE(parse_verdict(judge.complete(clients::user_request("hello")).content).has_value());
}

TEST(Metrics, PassAtK)
{
    EXPECT_DOUBLE_EQ(pass_at_k({outcome("a", {false, false, true})}, 3), 1.0);
    EXPECT_DOUBLE_EQ(pass_at_k({outcome("a", {false, false, false})}, 3), 0.0);
    EXPECT_DOUBLE_EQ(pass_at_k({outcome("a", {true, false, false}), outcome("b", {false, false, false})}, 3), 0.5);
    EXPECT_DOUBLE_EQ(pass_at_k({outcome("a", {false, true, true})}, 1), 0.0);
    EXPECT_THROW(pass_at_k({outcome("a", {true, true})}, 3), std::invalid_argument);
    EXPECT_THROW(pass_at_k({}, 1), std::invalid_argument);
    auto unjudged = outcome("a", {true});
    unjudged.attempts[0].correct.reset();
    EXPECT_THROW(pass_at_k({unjudged}, 1), std::invalid_argument);
}

TEST(Metrics, ConsAt3)
{
    EXPECT_DOUBLE_EQ(cons_at_3({outcome("a", {true, true, true})}), 1.0);
    EXPECT_DOUBLE_EQ(cons_at_3({outcome("a", {true, false, false})}), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(cons_at_3({outcome("a", {true, true, false}), outcome("b", {false, false, false})}), 1.0 / 3.0);
    EXPECT_THROW(cons_at_3({outcome("a", {true, true})}), std::invalid_argument);
    EXPECT_THROW(cons_at_3({outcome("a", {true, true, true, true})}), std::invalid_argument);
}

TEST(Metrics, OrderingAndPermutationProperty)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<RunOutcome> outcomes;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int q = 0; q < n; ++q)
            outcomes.push_back(outcome("q" + std::to_string(q), {rng() % 2 == 0, rng() % 3 == 0, rng() % 4 == 0}));
        const auto pass1 = pass_at_k(outcomes, 1);
        const auto pass3 = pass_at_k(outcomes, 3);
        const auto cons3 = cons_at_3(outcomes);
        EXPECT_LE(0.0, cons3);
        EXPECT_LE(cons3, pass3 + 1e-12);
        EXPECT_LE(pass3, 1.0);
        EXPECT_LE(pass1, pass3);

        // Pass@1 depends only on the first attempt.
        auto tail_flipped = outcomes;
        for (auto& o : tail_flipped)
            for (std::size_t i = 1; i < o.attempts.size(); ++i)
                o.attempts[i].correct = !*o.attempts[i].correct;
        EXPECT_DOUBLE_EQ(pass_at_k(tail_flipped, 1), pass1);

        auto shuffled = outcomes;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_DOUBLE_EQ(pass_at_k(shuffled, 1), pass1);
        EXPECT_DOUBLE_EQ(pass_at_k(shuffled, 3), pass3);
        EXPECT_NEAR(cons_at_3(shuffled), cons3, 1e-12);
    }
}

TEST(Metrics, ComputeByName)
{
    const std::vector<RunOutcome> outcomes{outcome("a", {true, true, false}), outcome("b", {false, false, true})};
    const auto report = compute_metrics(outcomes, {"pass@1", "pass@3", "cons@3"});
    EXPECT_DOUBLE_EQ(report.at("pass@1"), 0.5);
    EXPECT_DOUBLE_EQ(report.at("pass@3"), 1.0);
    EXPECT_DOUBLE_EQ(report.at("cons@3"), 0.5);
    EXPECT_THROW(compute_metrics(outcomes, {"recall"}), std::invalid_argument);
    EXPECT_THROW(compute_metrics(outcomes, {"pass@0"}), std::invalid_argument);
}

TEST(RunOutcomeJson, RoundTripAndJudging)
{
    const auto line = R"({"qa_id": "q1", "question": "Total?", "reference": "34689",
                          "attempts": [{"final_answer": "34689"}, {"final_answer": "1", "correct": true}]})";
    auto parsed = nlohmann::json::parse(line).get<RunOutcome>();
    EXPECT_EQ(parsed.attempts.size(), 2u);
    EXPECT_FALSE(parsed.attempts[0].correct.has_value());
    EXPECT_EQ(nlohmann::json(parsed).get<RunOutcome>(), parsed);

    std::vector<RunOutcome> outcomes{parsed};
    ReferenceMatchJudge judge;
    judge_outcomes(outcomes, judge);
    EXPECT_EQ(outcomes[0].attempts[0].correct, true);
    // Pre-judged attempts are left alone.
    EXPECT_EQ(outcomes[0].attempts[1].correct, true);

    std::vector<RunOutcome> no_reference{outcome("x", {true})};
    no_reference[0].attempts[0].correct.reset();
    EXPECT_THROW(judge_outcomes(no_reference, judge), std::invalid_argument);
    EXPECT_THROW(nlohmann::json::parse(R"({"qa_id": "q", "attempts": []})").get<RunOutcome>(), core::SchemaError);
}

} // namespace
} // namespace infoseek::eval
