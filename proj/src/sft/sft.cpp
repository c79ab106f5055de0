#include "infoseek/sft/sft.hpp"

#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace infoseek::sft {

using nlohmann::json;

SFTRecord emit_sft(const core::Trajectory& trajectory, const MaskPolicy& policy)
{
    const auto tagged = core::serialize_tagged_segments(trajectory);
    SFTRecord record;
    record.qa_id = trajectory.qa_id;
    record.text = tagged.text;
    const auto cp = [&](std::size_t byte) { return core::utf8_codepoint_offset(tagged.text, byte); };
    for (const auto& segment : tagged.segments) {
        record.segments.push_back({segment.role, cp(segment.begin), cp(segment.end)});
        if (segment.role != core::SegmentRole::observation)
            continue;
        if (policy.include_tags)
            record.mask_spans.emplace_back(cp(segment.begin), cp(segment.end));
        else
            record.mask_spans.emplace_back(cp(segment.begin + core::tags::response_open.size()),
                                           cp(segment.end - core::tags::response_close.size()));
    }
    return record;
}

std::optional<std::string> validate(const SFTRecord& record, const MaskPolicy& policy)
{
    using core::SegmentRole;
    const auto length = core::utf8_length(record.text);
    std::size_t cursor = 0;
    SegmentRole previous = SegmentRole::observation;
    for (std::size_t i = 0; i < record.segments.size(); ++i) {
        const auto& segment = record.segments[i];
        if (segment.start != cursor || segment.end <= segment.start)
            return fmt::format("segment {} does not continue the tiling at {}", i, cursor);
        const bool legal = [&] {
            switch (segment.role) {
            case SegmentRole::thought:
                return i == 0 || previous == SegmentRole::observation;
            case SegmentRole::action:
            case SegmentRole::answer:
                return previous == SegmentRole::thought && i > 0;
            case SegmentRole::observation:
                return previous == SegmentRole::action;
            }
            return false;
        }();
        if (!legal)
            return fmt::format("segment {} ({}) cannot follow {}", i, core::to_string(segment.role),
                               core::to_string(previous));
        previous = segment.role;
        cursor = segment.end;
    }
    if (cursor != length)
        return fmt::format("segments cover {} of {} code points", cursor, length);
    if (!record.segments.empty() && previous != SegmentRole::answer)
        return "record does not end with an answer segment";

    std::vector<Span> expected;
    const auto open = core::utf8_length(core::tags::response_open);
    const auto close = core::utf8_length(core::tags::response_close);
    for (const auto& segment : record.segments) {
        if (segment.role == SegmentRole::observation)
            expected.emplace_back(policy.include_tags ? segment.start : segment.start + open,
                                  policy.include_tags ? segment.end : segment.end - close);
    }
    if (record.mask_spans != expected)
        return "mask_spans differ from the observation segments";
    return std::nullopt;
}

void to_json(json& out, const SFTRecord& record)
{
    json segments = json::array();
    for (const auto& s : record.segments)
        segments.push_back(json{{"role", core::to_string(s.role)}, {"start", s.start}, {"end", s.end}});
    json masks = json::array();
    for (const auto& [start, end] : record.mask_spans)
        masks.push_back(json::array({start, end}));
    out = json{{"qa_id", record.qa_id}, {"text", record.text}, {"segments", segments}, {"mask_spans", masks}};
}

void from_json(const json& in, SFTRecord& record)
{
    const auto fail = [](const std::string& why) { throw core::SchemaError("SFT record: " + why); };
    if (!in.is_object())
        fail("not an object");
    for (const auto& [key, _] : in.items()) {
        if (key != "qa_id" && key != "text" && key != "segments" && key != "mask_spans")
            fail(fmt::format("unexpected key '{}'", key));
    }
    const auto index = [&](const json& value) {
        if (!value.is_number_unsigned())
            fail("offsets must be non-negative integers");
        return value.get<std::size_t>();
    };
    try {
        record = SFTRecord{};
        record.qa_id = in.at("qa_id").get<std::string>();
        record.text = in.at("text").get<std::string>();
        for (const auto& s : in.at("segments")) {
            if (!s.is_object() || s.size() != 3)
                fail("segments need exactly role, start and end");
            record.segments.push_back(
                {core::segment_role_from_string(s.at("role").get<std::string>()), index(s.at("start")), index(s.at("end"))});
        }
        for (const auto& m : in.at("mask_spans")) {
            if (!m.is_array() || m.size() != 2)
                fail("mask spans are [start, end] pairs");
            record.mask_spans.emplace_back(index(m[0]), index(m[1]));
        }
    }
    catch (const json::exception& e) {
        fail(e.what());
    }
    if (auto issue = validate(record))
        fail(*issue);
}

std::optional<std::string> validate(const TokenLoss& loss)
{
    if (loss.logprobs.size() != loss.masked.size())
        return "logprobs and mask lengths differ";
    if (!loss.offsets.empty() && loss.offsets.size() != loss.logprobs.size())
        return "offsets and logprobs lengths differ";
    if (std::find(loss.masked.begin(), loss.masked.end(), false) == loss.masked.end())
        return "every position is masked";
    return std::nullopt;
}

std::vector<bool> token_mask(const SFTRecord& record, const std::vector<Span>& token_offsets)
{
    std::vector<bool> masked;
    masked.reserve(token_offsets.size());
    for (const auto& [start, end] : token_offsets) {
        if (end < start)
            throw std::invalid_argument("token span ends before it starts");
        bool hit = false;
        for (const auto& [mask_start, mask_end] : record.mask_spans) {
            // Empty tokens count as covered when they sit inside a span.
            hit |= start == end ? (start >= mask_start && start < mask_end) : (start < mask_end && mask_start < end);
        }
        masked.push_back(hit);
    }
    return masked;
}

std::vector<bool> char_mask(const SFTRecord& record)
{
    std::vector<bool> masked(core::utf8_length(record.text), false);
    for (const auto& [start, end] : record.mask_spans) {
        for (auto i = start; i < end && i < masked.size(); ++i)
            masked[i] = true;
    }
    return masked;
}

double masked_nll(const std::vector<double>& logprobs, const std::vector<bool>& masked)
{
    if (logprobs.size() != masked.size())
        throw std::invalid_argument(
            fmt::format("masked_nll: {} logprobs but {} mask flags", logprobs.size(), masked.size()));
    double sum = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < logprobs.size(); ++i) {
        if (masked[i])
            continue;
        sum += logprobs[i];
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("masked_nll: every position is masked (zero normalizer)");
    return -sum / static_cast<double>(count);
}

double masked_nll(const TokenLoss& loss)
{
    if (auto issue = validate(loss))
        throw std::invalid_argument("masked_nll: " + *issue);
    return masked_nll(loss.logprobs, loss.masked);
}

} // namespace infoseek::sft
