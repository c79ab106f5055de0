#include "infoseek/rollout/completion.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

namespace infoseek::rollout {

namespace tags = core::tags;
using infoseek::unexpected;

std::string_view to_string(CompletionFormat format)
{
    return format == CompletionFormat::tagged ? "tagged" : "prompt";
}

CompletionFormat completion_format_from_string(std::string_view text)
{
    if (text == "prompt")
        return CompletionFormat::prompt;
    if (text == "tagged")
        return CompletionFormat::tagged;
    throw std::invalid_argument(fmt::format("unknown completion format '{}' (expected prompt|tagged)", text));
}

namespace {

std::size_t find_line_marker(std::string_view text, std::string_view marker, std::size_t from = 0)
{
    for (auto pos = text.find(marker, from); pos != std::string_view::npos; pos = text.find(marker, pos + 1)) {
        if (pos == 0 || text[pos - 1] == '\n')
            return pos;
    }
    return std::string_view::npos;
}

Result<core::ActionCall, std::string> decode_action(const core::json& payload)
{
    core::ActionCall action;
    try {
        action = core::action_from_json(payload);
    }
    catch (const core::UnknownToolError& e) {
        return unexpected(std::string(e.what()));
    }
    catch (const core::SchemaError& e) {
        return unexpected(std::string(e.what()));
    }
    if (action.is_answer())
        return unexpected(std::string("the answer is not a tool call"));
    if (auto issue = core::validate(action))
        return unexpected(*issue);
    return action;
}

std::string thought_before(std::string_view text)
{
    const auto marker = text.rfind("Thought:");
    if (marker != std::string_view::npos)
        text = text.substr(marker + 8);
    return std::string(core::trim(text));
}

} // namespace

Result<ParsedTurn, std::string> parse_prompt_turn(std::string_view text)
{
    if (const auto cut = find_line_marker(text, "Observation:"); cut != std::string_view::npos)
        text = text.substr(0, cut);

    const auto answer_at = find_line_marker(text, "Final Answer:");
    const auto action_at = find_line_marker(text, "Action:");
    if (answer_at == std::string_view::npos && action_at == std::string_view::npos)
        return unexpected(std::string("no Action or Final Answer"));

    if (answer_at < action_at) {
        auto answer = std::string(core::trim(text.substr(answer_at + 13)));
        if (answer.empty())
            return unexpected(std::string("empty Final Answer"));
        return ParsedTurn{thought_before(text.substr(0, answer_at)), core::ActionCall::answer(std::move(answer))};
    }

    const auto name_begin = action_at + 7;
    const auto name_end = std::min(text.find('\n', name_begin), text.size());
    auto name = std::string(core::trim(text.substr(name_begin, name_end - name_begin)));
    while (!name.empty() && (name.front() == '`' || name.front() == '['))
        name.erase(name.begin());
    while (!name.empty() && (name.back() == '`' || name.back() == ']'))
        name.pop_back();
    if (name.empty())
        return unexpected(std::string("empty Action"));
    const auto input_at = find_line_marker(text, "Action Input:", name_end);
    if (input_at == std::string_view::npos)
        return unexpected(fmt::format("Action '{}' has no Action Input", name));
    const auto arguments = core::extract_json_object(text.substr(input_at + 13));
    if (!arguments)
        return unexpected(std::string("Action Input is not a JSON object"));

    auto action = decode_action(core::json{{"name", name}, {"arguments", *arguments}});
    if (!action)
        return unexpected(action.error());
    return ParsedTurn{thought_before(text.substr(0, action_at)), std::move(*action)};
}

Result<ParsedTurn, std::string> parse_tagged_turn(std::string_view text)
{
    if (const auto cut = text.find(tags::response_open); cut != std::string_view::npos)
        text = text.substr(0, cut);
    auto rest = core::trim(text);

    std::string thought;
    if (rest.starts_with(tags::think_open)) {
        const auto close = rest.find(tags::think_close);
        if (close == std::string_view::npos)
            return unexpected(std::string("unclosed <think>"));
        thought = std::string(core::trim(rest.substr(tags::think_open.size(), close - tags::think_open.size())));
        rest = core::trim(rest.substr(close + tags::think_close.size()));
    }
    else if (const auto tag = rest.find('<'); tag != std::string_view::npos && tag > 0) {
        thought = std::string(core::trim(rest.substr(0, tag)));
        rest = rest.substr(tag);
    }

    if (rest.starts_with(tags::answer_open)) {
        const auto close = rest.find(tags::answer_close);
        if (close == std::string_view::npos)
            return unexpected(std::string("unclosed <answer>"));
        auto answer = std::string(core::trim(rest.substr(tags::answer_open.size(), close - tags::answer_open.size())));
        if (answer.empty())
            return unexpected(std::string("empty <answer>"));
        return ParsedTurn{std::move(thought), core::ActionCall::answer(std::move(answer))};
    }
    if (!rest.starts_with(tags::call_open))
        return unexpected(std::string("no <tool_call> or <answer>"));
    const auto close = rest.find(tags::call_close);
    if (close == std::string_view::npos)
        return unexpected(std::string("unclosed <tool_call>"));
    const auto payload =
        core::json::parse(rest.substr(tags::call_open.size(), close - tags::call_open.size()), nullptr, false);
    if (payload.is_discarded())
        return unexpected(std::string("invalid JSON in <tool_call>"));
    auto action = decode_action(payload);
    if (!action)
        return unexpected(action.error());
    return ParsedTurn{std::move(thought), std::move(*action)};
}

Result<ParsedTurn, std::string> parse_turn(std::string_view text, CompletionFormat format)
{
    return format == CompletionFormat::tagged ? parse_tagged_turn(text) : parse_prompt_turn(text);
}

std::string render_action(const core::ActionCall& action, CompletionFormat format)
{
    if (const auto* answer = std::get_if<core::AnswerArgs>(&action.args)) {
        return format == CompletionFormat::tagged
                   ? fmt::format("{}{}{}", tags::answer_open, answer->final_answer, tags::answer_close)
                   : fmt::format("Final Answer: {}", answer->final_answer);
    }
    const auto payload = core::action_to_json(action);
    if (format == CompletionFormat::tagged)
        return fmt::format("{}{}{}", tags::call_open, core::dump_tag_safe(payload), tags::call_close);
    return fmt::format("Action: {}\nAction Input: {}", core::to_string(action.name()),
                       payload.at("arguments").dump(-1, ' ', false, core::json::error_handler_t::replace));
}

std::string render_observation(const core::Observation& observation, CompletionFormat format)
{
    const auto payload = core::observation_to_json(observation);
    if (format == CompletionFormat::tagged)
        return fmt::format("{}{}{}", tags::response_open, core::dump_tag_safe(payload), tags::response_close);
    return fmt::format("Observation: {}", payload.dump(-1, ' ', false, core::json::error_handler_t::replace));
}

std::string render_prompt_transcript(const std::vector<core::Step>& steps)
{
    std::string out;
    for (const auto& step : steps) {
        out += fmt::format("Thought: {}\n{}\n", step.thought, render_action(step.action, CompletionFormat::prompt));
        if (step.observation)
            out += render_observation(*step.observation, CompletionFormat::prompt) + "\n";
    }
    if (!out.empty())
        out.pop_back();
    return out;
}

Result<core::Trajectory, std::string> parse_prompt_transcript(std::string_view text)
{
    core::Trajectory trajectory;
    std::size_t pos = 0;
    for (int round = 1;; ++round) {
        const auto observation_at = find_line_marker(text, "Observation:", pos);
        const auto chunk = text.substr(pos, observation_at == std::string_view::npos ? std::string_view::npos
                                                                                     : observation_at - pos);
        auto turn = parse_prompt_turn(chunk);
        if (!turn)
            return unexpected(fmt::format("round {}: {}", round, turn.error()));
        if (turn->action.is_answer()) {
            if (observation_at != std::string_view::npos)
                return unexpected(fmt::format("round {}: Observation after the Final Answer", round));
            trajectory.steps.push_back({std::move(turn->thought), std::move(turn->action), std::nullopt});
            return trajectory;
        }
        if (observation_at == std::string_view::npos)
            return unexpected(fmt::format("round {}: Action without Observation", round));
        const auto line_end = std::min(text.find('\n', observation_at), text.size());
        const auto payload = core::json::parse(text.substr(observation_at + 12, line_end - observation_at - 12),
                                               nullptr, false);
        if (payload.is_discarded())
            return unexpected(fmt::format("round {}: Observation is not valid JSON", round));
        core::Observation observation;
        try {
            observation = core::observation_from_json(payload, turn->action.name());
        }
        catch (const core::SchemaError& e) {
            return unexpected(fmt::format("round {}: {}", round, e.what()));
        }
        trajectory.steps.push_back({std::move(turn->thought), std::move(turn->action), std::move(observation)});
        pos = line_end + 1;
        if (pos >= text.size())
            return unexpected(std::string("missing Final Answer"));
    }
}

} // namespace infoseek::rollout
