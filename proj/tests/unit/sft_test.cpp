#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"
#include "infoseek/sft/sft.hpp"

#include "support/generators.hpp"

#include <gtest/gtest.h>

#include <random>

namespace infoseek::sft {
namespace {

using core::ActionCall;

core::Trajectory answer_only()
{
    core::Trajectory t;
    t.qa_id = "q1";
    t.steps.push_back({"easy", ActionCall::answer("42"), std::nullopt});
    return t;
}

core::Trajectory search_then_answer()
{
    core::Trajectory t;
    t.qa_id = "q2";
    t.steps.push_back({"look", ActionCall::search("café prices"),
                       core::SearchObservation{{{"Café", "prices in €", "https://x.example/c"}}}});
    t.steps.push_back({"done", ActionCall::answer("3 €"), std::nullopt});
    return t;
}

// Independent oracle: locate tool_response blocks by plain substring search
// (payloads escape '<', so the closing tag cannot occur inside them).
std::vector<Span> response_blocks(const std::string& text, bool include_tags)
{
    std::vector<Span> out;
    const std::string open = "<tool_response>";
    const std::string close = "</tool_response>";
    for (auto at = text.find(open); at != std::string::npos; at = text.find(open, at + 1)) {
        const auto end = text.find(close, at);
        const auto begin_byte = include_tags ? at : at + open.size();
        const auto end_byte = include_tags ? end + close.size() : end;
        out.emplace_back(core::utf8_codepoint_offset(text, begin_byte), core::utf8_codepoint_offset(text, end_byte));
    }
    return out;
}

TEST(EmitSft, AnswerOnlyHasNoMasks)
{
    const auto record = emit_sft(answer_only());
    EXPECT_EQ(record.text, "<think>easy</think><answer>42</answer>");
    EXPECT_TRUE(record.mask_spans.empty());
    ASSERT_EQ(record.segments.size(), 2u);
    EXPECT_EQ(record.segments[1], (RecordSegment{core::SegmentRole::answer, 19, 38}));
}

TEST(EmitSft, SearchThenAnswerMasksTheResponse)
{
    const auto record = emit_sft(search_then_answer());
    ASSERT_EQ(record.mask_spans.size(), 1u);
    const auto [start, end] = record.mask_spans[0];
    const auto begin_byte = core::utf8_byte_offset(record.text, start);
    const auto end_byte = core::utf8_byte_offset(record.text, end);
    const auto masked = record.text.substr(begin_byte, end_byte - begin_byte);
    EXPECT_TRUE(masked.starts_with("<tool_response>"));
    EXPECT_TRUE(masked.ends_with("</tool_response>"));
    EXPECT_NE(masked.find("prices in €"), std::string::npos);
    EXPECT_EQ(validate(record), std::nullopt);

    const auto exclusive = emit_sft(search_then_answer(), {false});
    EXPECT_EQ(exclusive.mask_spans[0], (Span{start + 15, end - 16}));
    EXPECT_EQ(validate(exclusive, {false}), std::nullopt);
    EXPECT_NE(validate(exclusive), std::nullopt);
}

TEST(EmitSft, SerializationErrorPropagates)
{
    auto t = answer_only();
    t.steps[0].thought = "bad </think> thought";
    EXPECT_THROW(emit_sft(t), core::SerializationError);
}

TEST(EmitSft, MasksMatchReparseOracleProperty)
{
    testing::Rng rng(21);
    for (int i = 0; i < 300; ++i) {
        const auto t = testing::random_trajectory(rng);
        for (bool include_tags : {true, false}) {
            const auto record = emit_sft(t, {include_tags});
            ASSERT_EQ(validate(record, {include_tags}), std::nullopt);
            auto parsed = core::parse_tagged(record.text);
            ASSERT_TRUE(parsed);
            std::size_t observations = 0;
            for (const auto& step : parsed->steps)
                observations += step.observation.has_value();
            EXPECT_EQ(record.mask_spans.size(), observations);
            EXPECT_EQ(record.mask_spans, response_blocks(record.text, include_tags));

            std::vector<Span> observation_segments;
            for (const auto& s : record.segments) {
                if (s.role == core::SegmentRole::observation)
                    observation_segments.emplace_back(s.start, s.end);
            }
            if (include_tags)
                EXPECT_EQ(record.mask_spans, observation_segments);
        }
    }
}

TEST(SftRecord, JsonRoundTripAndStrictness)
{
    const auto record = emit_sft(search_then_answer());
    const nlohmann::json j = record;
    EXPECT_EQ(j["segments"][0]["role"], "thought");
    EXPECT_TRUE(j["mask_spans"][0].is_array());
    EXPECT_EQ(j.get<SFTRecord>(), record);

    auto shifted = j;
    shifted["mask_spans"][0][0] = 0;
    EXPECT_THROW(shifted.get<SFTRecord>(), core::SchemaError);
    auto extra = j;
    extra["tokens"] = 3;
    EXPECT_THROW(extra.get<SFTRecord>(), core::SchemaError);
    auto gap = j;
    gap["segments"][1]["start"] = gap["segments"][1]["start"].get<int>() + 1;
    EXPECT_THROW(gap.get<SFTRecord>(), core::SchemaError);
}

TEST(MaskedNll, Examples)
{
    EXPECT_DOUBLE_EQ(masked_nll({-1, -2, -3, -4}, {false, true, true, false}), 2.5);
    EXPECT_DOUBLE_EQ(masked_nll({-2, -2}, {false, false}), 2.0);
    EXPECT_THROW(masked_nll({-1, -1}, {true, true}), std::invalid_argument);
    EXPECT_THROW(masked_nll({-1}, {false, false}), std::invalid_argument);
    EXPECT_THROW(masked_nll(TokenLoss{{}, {-1.0}, {true}}), std::invalid_argument);
    EXPECT_DOUBLE_EQ(masked_nll(TokenLoss{{{0, 1}, {1, 2}}, {-1.0, -3.0}, {false, false}}), 2.0);
}

TEST(MaskedNll, InvariantToMaskedValuesProperty)
{
    testing::Rng rng(8);
    std::uniform_real_distribution<double> logprob(-12.0, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto t = testing::random_trajectory(rng);
        const auto record = emit_sft(t);
        const auto mask = char_mask(record);
        std::vector<double> values(mask.size());
        for (auto& v : values)
            v = logprob(rng);
        const double base = masked_nll(values, mask);

        std::size_t unmasked = 0;
        double sum = 0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) {
                ++unmasked;
                sum += values[i];
            }
        }
        std::size_t masked_count = 0;
        for (const auto& [s, e] : record.mask_spans)
            masked_count += e - s;
        EXPECT_EQ(unmasked, core::utf8_length(record.text) - masked_count);
        EXPECT_NEAR(base, -sum / static_cast<double>(unmasked), 1e-12);

        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (mask[i])
                values[i] = logprob(rng) * 100;
        }
        EXPECT_DOUBLE_EQ(masked_nll(values, mask), base);
    }
}

TEST(TokenMask, OverlapRule)
{
    const auto record = emit_sft(search_then_answer());
    const auto [start, end] = record.mask_spans[0];
    const auto mask = token_mask(record, {{0, 3}, {start - 1, start + 1}, {start + 2, start + 4}, {end - 1, end + 1},
                                          {end, end + 2}, {start + 1, start + 1}});
    EXPECT_EQ(mask, (std::vector<bool>{false, true, true, true, false, true}));
    EXPECT_THROW(token_mask(record, {{3, 2}}), std::invalid_argument);

    std::vector<Span> per_char;
    for (std::size_t i = 0; i < core::utf8_length(record.text); ++i)
        per_char.emplace_back(i, i + 1);
    EXPECT_EQ(token_mask(record, per_char), char_mask(record));
}

} // namespace
} // namespace infoseek::sft
