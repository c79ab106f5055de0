#include "infoseek/core/json.hpp"

#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <initializer_list>

namespace infoseek::core {

namespace {

void require_object(const json& value, std::string_view what)
{
    if (!value.is_object())
        throw SchemaError(fmt::format("{} must be a JSON object", what));
}

void require_keys_within(const json& object, std::initializer_list<std::string_view> allowed,
                         std::string_view what)
{
    for (const auto& [key, _] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw SchemaError(fmt::format("{}: unexpected key '{}'", what, key));
    }
}

const json& require_key(const json& object, const char* key, std::string_view what)
{
    const auto it = object.find(key);
    if (it == object.end())
        throw SchemaError(fmt::format("{}: missing required key '{}'", what, key));
    return *it;
}

std::string require_string(const json& object, const char* key, std::string_view what)
{
    const auto& value = require_key(object, key, what);
    if (!value.is_string())
        throw SchemaError(fmt::format("{}: '{}' must be a string", what, key));
    return value.get<std::string>();
}

std::string optional_string(const json& object, const char* key, std::string_view what)
{
    if (!object.contains(key))
        return {};
    return require_string(object, key, what);
}

int require_int(const json& value, std::string_view what)
{
    if (!value.is_number_integer())
        throw SchemaError(fmt::format("{} must be an integer", what));
    return value.get<int>();
}

} // namespace

void to_json(json& out, const QAPair& qa)
{
    out = json{{"id", qa.id},
               {"question", qa.question},
               {"answer", qa.answer},
               {"source", to_string(qa.source)},
               {"e2h_iterations", qa.e2h_iterations},
               {"question_type", qa.question_type ? json(to_string(*qa.question_type)) : json(nullptr)},
               {"provenance_urls", qa.provenance_urls}};
}

void from_json(const json& in, QAPair& qa)
{
    constexpr std::string_view what = "QAPair";
    require_object(in, what);
    require_keys_within(in, {"id", "question", "answer", "source", "e2h_iterations", "question_type",
                             "provenance_urls"},
                        what);
    qa = QAPair{};
    qa.id = require_string(in, "id", what);
    qa.question = require_string(in, "question", what);
    qa.answer = require_string(in, "answer", what);
    if (in.contains("source"))
        qa.source = qa_source_from_string(require_string(in, "source", what));
    if (in.contains("e2h_iterations"))
        qa.e2h_iterations = require_int(in.at("e2h_iterations"), "QAPair.e2h_iterations");
    if (in.contains("question_type") && !in.at("question_type").is_null())
        qa.question_type = question_type_from_string(require_string(in, "question_type", what));
    if (in.contains("provenance_urls")) {
        const auto& urls = in.at("provenance_urls");
        if (!urls.is_array())
            throw SchemaError("QAPair.provenance_urls must be an array");
        for (const auto& url : urls) {
            if (!url.is_string())
                throw SchemaError("QAPair.provenance_urls entries must be strings");
            qa.provenance_urls.push_back(url.get<std::string>());
        }
    }
    if (auto issue = validate(qa))
        throw SchemaError(*issue);
}

void to_json(json& out, const SamplingParams& params)
{
    out = json{{"temperature", params.temperature},
               {"top_p", params.top_p},
               {"repetition_penalty", params.repetition_penalty},
               {"max_rounds", params.max_rounds}};
}

void from_json(const json& in, SamplingParams& params)
{
    require_object(in, "sampling_params");
    require_keys_within(in, {"temperature", "top_p", "repetition_penalty", "max_rounds"},
                        "sampling_params");
    params = SamplingParams{};
    if (in.contains("temperature"))
        params.temperature = in.at("temperature").get<double>();
    if (in.contains("top_p"))
        params.top_p = in.at("top_p").get<double>();
    if (in.contains("repetition_penalty"))
        params.repetition_penalty = in.at("repetition_penalty").get<double>();
    if (in.contains("max_rounds"))
        params.max_rounds = require_int(in.at("max_rounds"), "sampling_params.max_rounds");
    if (auto issue = validate(params))
        throw SchemaError(*issue);
}

json action_to_json(const ActionCall& action)
{
    json arguments = json::object();
    std::visit(
        [&](const auto& args) {
            using T = std::decay_t<decltype(args)>;
            if constexpr (std::is_same_v<T, SearchArgs>) {
                arguments["query"] = args.query;
                if (args.filter_year)
                    arguments["filter_year"] = *args.filter_year;
            }
            else if constexpr (std::is_same_v<T, VisitArgs>) {
                arguments["goal"] = args.goal;
                arguments["url_link"] = args.url_link;
            }
            else {
                arguments["final_answer"] = args.final_answer;
            }
        },
        action.args);
    return json{{"name", to_string(action.name())}, {"arguments", std::move(arguments)}};
}

ActionCall action_from_json(const json& payload)
{
    constexpr std::string_view what = "tool call";
    require_object(payload, what);
    require_keys_within(payload, {"name", "arguments"}, what);
    const auto name_text = require_string(payload, "name", what);
    const auto name = tool_name_from_string(name_text);
    if (!name)
        throw UnknownToolError(fmt::format("unknown tool '{}'", name_text));
    const auto& arguments = require_key(payload, "arguments", what);
    const auto where = fmt::format("{} arguments", name_text);
    require_object(arguments, where);

    ActionCall action;
    switch (*name) {
    case ToolName::search: {
        require_keys_within(arguments, {"query", "filter_year"}, where);
        SearchArgs args{require_string(arguments, "query", where), std::nullopt};
        if (arguments.contains("filter_year"))
            args.filter_year = require_int(arguments.at("filter_year"), "search.filter_year");
        action.args = std::move(args);
        break;
    }
    case ToolName::visit:
        require_keys_within(arguments, {"goal", "url_link"}, where);
        action.args = VisitArgs{require_string(arguments, "goal", where),
                                require_string(arguments, "url_link", where)};
        break;
    case ToolName::answer:
        require_keys_within(arguments, {"final_answer"}, where);
        action.args = AnswerArgs{require_string(arguments, "final_answer", where)};
        break;
    }
    if (auto issue = validate(action))
        throw SchemaError(*issue);
    return action;
}

json observation_to_json(const Observation& observation)
{
    if (const auto* search = std::get_if<SearchObservation>(&observation)) {
        json results = json::array();
        for (const auto& r : search->results)
            results.push_back(json{{"title", r.title}, {"snippet", r.snippet}, {"url", r.url}});
        return json{{"results", std::move(results)}};
    }
    const auto& visit = std::get<VisitObservation>(observation);
    return json{{"evidence", visit.evidence}, {"summary", visit.summary}};
}

Observation observation_from_json(const json& payload, ToolName after)
{
    constexpr std::string_view what = "observation";
    require_object(payload, what);
    if (payload.contains("results")) {
        require_keys_within(payload, {"results"}, what);
        if (after != ToolName::search)
            throw SchemaError(fmt::format("search observation after a {} action", to_string(after)));
        const auto& results = payload.at("results");
        if (!results.is_array())
            throw SchemaError("observation.results must be an array");
        if (results.size() > kMaxSearchResults)
            throw SchemaError(fmt::format("observation has {} search results (max {})",
                                          results.size(), kMaxSearchResults));
        SearchObservation out;
        for (const auto& item : results) {
            require_object(item, "search result");
            require_keys_within(item, {"title", "snippet", "url"}, "search result");
            out.results.push_back(SearchResult{require_string(item, "title", "search result"),
                                               require_string(item, "snippet", "search result"),
                                               require_string(item, "url", "search result")});
        }
        return out;
    }
    require_keys_within(payload, {"evidence", "summary"}, what);
    VisitObservation visit{require_string(payload, "evidence", what),
                           require_string(payload, "summary", what)};
    Observation out = visit;
    if (after == ToolName::answer)
        throw SchemaError("observation after an answer action");
    if (after == ToolName::search && !is_tool_error(out))
        throw SchemaError("visit observation after a search action");
    return out;
}

std::optional<json> extract_json_object(std::string_view reply)
{
    auto body = trim(reply);
    if (body.starts_with("```")) {
        const auto newline = body.find('\n');
        const auto fence_end = body.rfind("```");
        if (newline != std::string_view::npos && fence_end > newline)
            body = trim(body.substr(newline + 1, fence_end - newline - 1));
    }
    auto parsed = json::parse(body, nullptr, false);
    if (parsed.is_discarded()) {
        const auto open = body.find('{');
        const auto close = body.rfind('}');
        if (open == std::string_view::npos || close == std::string_view::npos || close < open)
            return std::nullopt;
        parsed = json::parse(body.substr(open, close - open + 1), nullptr, false);
    }
    if (parsed.is_discarded() || !parsed.is_object())
        return std::nullopt;
    return parsed;
}

std::string dump_tag_safe(const json& value)
{
    return replace_all(value.dump(-1, ' ', false, json::error_handler_t::replace), "<", "\\u003c");
}

void to_json(json& out, const SamplerMeta& meta)
{
    out = json{{"model_id", meta.model_id},
               {"attempt_index", meta.attempt_index},
               {"sampling_params", meta.sampling},
               {"fallback_thought_steps", meta.fallback_thought_steps}};
}

void from_json(const json& in, SamplerMeta& meta)
{
    require_object(in, "sampler_meta");
    require_keys_within(in, {"model_id", "attempt_index", "sampling_params", "fallback_thought_steps"},
                        "sampler_meta");
    meta = SamplerMeta{};
    meta.model_id = optional_string(in, "model_id", "sampler_meta");
    if (in.contains("attempt_index"))
        meta.attempt_index = require_int(in.at("attempt_index"), "sampler_meta.attempt_index");
    if (in.contains("sampling_params"))
        meta.sampling = in.at("sampling_params").get<SamplingParams>();
    if (in.contains("fallback_thought_steps"))
        meta.fallback_thought_steps = in.at("fallback_thought_steps").get<std::vector<std::size_t>>();
}

void to_json(json& out, const Trajectory& trajectory)
{
    json steps = json::array();
    for (const auto& step : trajectory.steps) {
        steps.push_back(json{{"thought", step.thought},
                             {"action", action_to_json(step.action)},
                             {"observation", step.observation ? observation_to_json(*step.observation)
                                                              : json(nullptr)}});
    }
    out = json{{"qa_id", trajectory.qa_id},
               {"cot_mode", to_string(trajectory.cot_mode)},
               {"sampler_meta", json(trajectory.sampler_meta)},
               {"steps", std::move(steps)}};
}

void from_json(const json& in, Trajectory& trajectory)
{
    constexpr std::string_view what = "Trajectory";
    require_object(in, what);
    require_keys_within(in, {"qa_id", "cot_mode", "sampler_meta", "steps"}, what);
    trajectory = Trajectory{};
    trajectory.qa_id = require_string(in, "qa_id", what);
    trajectory.cot_mode = cot_mode_from_string(require_string(in, "cot_mode", what));
    if (in.contains("sampler_meta"))
        trajectory.sampler_meta = in.at("sampler_meta").get<SamplerMeta>();
    const auto& steps = require_key(in, "steps", what);
    if (!steps.is_array())
        throw SchemaError("Trajectory.steps must be an array");
    for (const auto& item : steps) {
        require_object(item, "step");
        require_keys_within(item, {"thought", "action", "observation"}, "step");
        Step step{require_string(item, "thought", "step"), action_from_json(require_key(item, "action", "step")),
                  std::nullopt};
        if (item.contains("observation") && !item.at("observation").is_null())
            step.observation = observation_from_json(item.at("observation"), step.action.name());
        trajectory.steps.push_back(std::move(step));
    }
    if (auto issue = validate(trajectory))
        throw SchemaError(fmt::format("Trajectory {}: {}", trajectory.qa_id, *issue));
}

} // namespace infoseek::core
