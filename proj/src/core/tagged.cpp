#include "infoseek/core/tagged.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <array>
#include <cctype>

namespace infoseek::core {

std::string_view to_string(SegmentRole role)
{
    switch (role) {
    case SegmentRole::thought: return "thought";
    case SegmentRole::action: return "action";
    case SegmentRole::observation: return "observation";
    case SegmentRole::answer: return "answer";
    }
    return "thought";
}

SegmentRole segment_role_from_string(std::string_view text)
{
    if (text == "thought")
        return SegmentRole::thought;
    if (text == "action")
        return SegmentRole::action;
    if (text == "observation")
        return SegmentRole::observation;
    if (text == "answer")
        return SegmentRole::answer;
    throw SchemaError(fmt::format("unknown segment role '{}'", text));
}

std::string_view to_string(ParseErrorKind kind)
{
    switch (kind) {
    case ParseErrorKind::unclosed_tag: return "unclosed tag";
    case ParseErrorKind::out_of_order_tag: return "out-of-order tag";
    case ParseErrorKind::invalid_json: return "invalid JSON";
    case ParseErrorKind::unknown_tool: return "unknown tool name";
    case ParseErrorKind::schema_violation: return "schema violation";
    case ParseErrorKind::missing_answer: return "missing answer";
    case ParseErrorKind::unexpected_end: return "unexpected end of text";
    case ParseErrorKind::unexpected_text: return "unexpected text";
    }
    return "parse error";
}

std::string ParseError::message() const
{
    if (detail.empty())
        return fmt::format("{} at offset {}", to_string(kind), position);
    return fmt::format("{} at offset {}: {}", to_string(kind), position, detail);
}

TaggedText serialize_tagged_segments(const Trajectory& trajectory)
{
    if (auto issue = validate(trajectory))
        throw SerializationError(fmt::format("cannot serialize trajectory {}: {}", trajectory.qa_id, *issue));

    TaggedText out;
    auto& text = out.text;
    const auto emit = [&](SegmentRole role, std::size_t begin) {
        out.segments.push_back(Segment{role, begin, text.size()});
    };

    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const auto& step = trajectory.steps[i];
        if (contains(step.thought, tags::think_close))
            throw SerializationError(fmt::format("cannot serialize trajectory {}: step {}: thought contains {}",
                                                 trajectory.qa_id, i, tags::think_close));
        auto begin = text.size();
        if (i > 0)
            text += '\n';
        text += tags::think_open;
        text += step.thought;
        text += tags::think_close;
        emit(SegmentRole::thought, begin);

        if (step.action.is_answer()) {
            const auto& answer = std::get<AnswerArgs>(step.action.args).final_answer;
            if (contains(answer, tags::answer_close))
                throw SerializationError(fmt::format("cannot serialize trajectory {}: final answer contains {}",
                                                     trajectory.qa_id, tags::answer_close));
            begin = text.size();
            text += tags::answer_open;
            text += answer;
            text += tags::answer_close;
            emit(SegmentRole::answer, begin);
            continue;
        }

        begin = text.size();
        text += tags::call_open;
        text += dump_tag_safe(action_to_json(step.action));
        text += tags::call_close;
        emit(SegmentRole::action, begin);

        begin = text.size();
        text += tags::response_open;
        text += dump_tag_safe(observation_to_json(*step.observation));
        text += tags::response_close;
        emit(SegmentRole::observation, begin);
    }
    return out;
}

std::string serialize_tagged(const Trajectory& trajectory)
{
    return serialize_tagged_segments(trajectory).text;
}

namespace {

constexpr std::array<std::string_view, 8> kAllTags = {
    tags::think_open,    tags::think_close,    tags::call_open,   tags::call_close,
    tags::response_open, tags::response_close, tags::answer_open, tags::answer_close,
};

class TaggedParser {
public:
    explicit TaggedParser(std::string_view text) : text_(text) {}

    Result<Trajectory, ParseError> run()
    {
        Trajectory trajectory;
        while (true) {
            skip_space();
            if (at_end())
                return fail(ParseErrorKind::missing_answer,
                            trajectory.steps.empty() ? "empty text" : "text ends without <answer>");
            if (!starts_with(tags::think_open))
                return unexpected(tags::think_open);

            std::string thought;
            if (auto err = read_block(tags::think_open, tags::think_close, thought))
                return infoseek::unexpected(std::move(*err));

            skip_space();
            if (at_end())
                return fail(ParseErrorKind::missing_answer, "text ends after </think>");

            if (starts_with(tags::answer_open)) {
                std::string answer;
                if (auto err = read_block(tags::answer_open, tags::answer_close, answer))
                    return infoseek::unexpected(std::move(*err));
                trajectory.steps.push_back(Step{std::move(thought), ActionCall::answer(std::move(answer)),
                                                std::nullopt});
                skip_space();
                if (!at_end())
                    return unexpected_trailing();
                return trajectory;
            }
            if (!starts_with(tags::call_open))
                return unexpected("<tool_call> or <answer>");

            const auto call_pos = pos_;
            std::string call_body;
            if (auto err = read_block(tags::call_open, tags::call_close, call_body))
                return infoseek::unexpected(std::move(*err));
            ActionCall action;
            const auto call_payload = json::parse(call_body, nullptr, false);
            if (call_payload.is_discarded())
                return fail_at(call_pos, ParseErrorKind::invalid_json, "tool_call payload is not valid JSON");
            try {
                action = action_from_json(call_payload);
            }
            catch (const UnknownToolError& e) {
                return fail_at(call_pos, ParseErrorKind::unknown_tool, e.what());
            }
            catch (const SchemaError& e) {
                return fail_at(call_pos, ParseErrorKind::schema_violation, e.what());
            }
            catch (const json::exception& e) {
                return fail_at(call_pos, ParseErrorKind::schema_violation, e.what());
            }
            if (action.is_answer())
                return fail_at(call_pos, ParseErrorKind::schema_violation,
                               "the answer action must use an <answer> block");

            skip_space();
            if (at_end())
                return fail(ParseErrorKind::unexpected_end, "expected <tool_response> after </tool_call>");
            if (!starts_with(tags::response_open))
                return unexpected(tags::response_open);
            const auto response_pos = pos_;
            std::string response_body;
            if (auto err = read_block(tags::response_open, tags::response_close, response_body))
                return infoseek::unexpected(std::move(*err));
            const auto response_payload = json::parse(response_body, nullptr, false);
            if (response_payload.is_discarded())
                return fail_at(response_pos, ParseErrorKind::invalid_json,
                               "tool_response payload is not valid JSON");
            Observation observation;
            try {
                observation = observation_from_json(response_payload, action.name());
            }
            catch (const SchemaError& e) {
                return fail_at(response_pos, ParseErrorKind::schema_violation, e.what());
            }
            catch (const json::exception& e) {
                return fail_at(response_pos, ParseErrorKind::schema_violation, e.what());
            }
            trajectory.steps.push_back(Step{std::move(thought), std::move(action), std::move(observation)});
        }
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }

    bool starts_with(std::string_view tag) const { return text_.substr(pos_).starts_with(tag); }

    void skip_space()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }

    std::optional<ParseError> read_block(std::string_view open, std::string_view close, std::string& content)
    {
        const auto start = pos_;
        const auto body = pos_ + open.size();
        const auto end = text_.find(close, body);
        if (end == std::string_view::npos)
            return ParseError{ParseErrorKind::unclosed_tag, start, fmt::format("{} is never closed", open)};
        content.assign(text_.substr(body, end - body));
        pos_ = end + close.size();
        return std::nullopt;
    }

    Result<Trajectory, ParseError> fail(ParseErrorKind kind, std::string detail) const
    {
        return fail_at(pos_, kind, std::move(detail));
    }

    static Result<Trajectory, ParseError> fail_at(std::size_t pos, ParseErrorKind kind, std::string detail)
    {
        return infoseek::unexpected(ParseError{kind, pos, std::move(detail)});
    }

    std::optional<std::string_view> tag_here() const
    {
        for (const auto tag : kAllTags) {
            if (starts_with(tag))
                return tag;
        }
        return std::nullopt;
    }

    Result<Trajectory, ParseError> unexpected(std::string_view expected) const
    {
        if (const auto tag = tag_here())
            return fail(ParseErrorKind::out_of_order_tag, fmt::format("found {} where {} was expected", *tag, expected));
        return fail(ParseErrorKind::unexpected_text, fmt::format("expected {}", expected));
    }

    Result<Trajectory, ParseError> unexpected_trailing() const
    {
        if (const auto tag = tag_here())
            return fail(ParseErrorKind::out_of_order_tag, fmt::format("found {} after </answer>", *tag));
        return fail(ParseErrorKind::unexpected_text, "text after </answer>");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

} // namespace

Result<Trajectory, ParseError> parse_tagged(std::string_view text)
{
    return TaggedParser(text).run();
}

} // namespace infoseek::core
