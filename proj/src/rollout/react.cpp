#include "infoseek/rollout/react.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/parallel.hpp"
#include "infoseek/core/prompts.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace infoseek::rollout {

void validate(const RolloutConfig& config)
{
    if (config.rejection_budget < 1)
        throw std::invalid_argument("rejection_budget must be >= 1");
    if (auto issue = core::validate(config.sampling))
        throw std::invalid_argument(*issue);
}

namespace {

const core::PromptTemplate& task_template(core::CotMode mode, CompletionFormat format)
{
    if (format == CompletionFormat::tagged)
        return core::prompts::react_tagged;
    return mode == core::CotMode::long_cot ? core::prompts::react_reasoning : core::prompts::react_instruct;
}

std::string_view format_hint(core::CotMode mode, CompletionFormat format)
{
    if (format == CompletionFormat::tagged)
        return "Write the next <think> block, then a <tool_call> or the <answer>.";
    if (mode == core::CotMode::long_cot)
        return "Write the next Action with its Action Input, or the Final Answer.";
    return "Write the next Thought, then an Action with its Action Input, or the Final Answer.";
}

std::string render_turn(const core::Step& step, core::CotMode mode, CompletionFormat format)
{
    const auto action = render_action(step.action, format);
    if (mode == core::CotMode::long_cot)
        return action;
    if (format == CompletionFormat::tagged)
        return fmt::format("{}{}{}{}", core::tags::think_open, step.thought, core::tags::think_close, action);
    return fmt::format("Thought: {}\n{}", step.thought, action);
}

} // namespace

std::vector<clients::ChatMessage> build_context(const core::QAPair& qa, const std::vector<core::Step>& history,
                                                core::CotMode cot_mode, CompletionFormat format,
                                                const ToolRegistry& tools)
{
    std::vector<clients::ChatMessage> messages;
    messages.push_back({"user", core::render_template(task_template(cot_mode, format).text,
                                                      {{"tool_descs", tools.descriptions()},
                                                       {"tool_names", tools.name_list()},
                                                       {"query", qa.question}})});
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& step = history[i];
        if (step.action.is_answer() || !step.observation)
            throw std::invalid_argument(fmt::format("history step {} is terminal", i));
        messages.push_back({"assistant", render_turn(step, cot_mode, format)});
        auto observation = render_observation(*step.observation, format);
        if (i + 1 == history.size()) {
            observation += "\n\n";
            observation += core::render_template(core::prompts::react_continue.text,
                                                 {{"format_hint", std::string(format_hint(cot_mode, format))}});
        }
        messages.push_back({"user", std::move(observation)});
    }
    return messages;
}

std::string_view to_string(RolloutFailureKind kind)
{
    switch (kind) {
    case RolloutFailureKind::format: return "format";
    case RolloutFailureKind::no_answer: return "no_answer";
    case RolloutFailureKind::backend: return "backend";
    }
    return "format";
}

Result<core::Trajectory, RolloutFailure> run_react(const core::QAPair& qa, clients::ChatBackend& backend,
                                                         const ToolRegistry& tools, const RolloutConfig& config,
                                                         int attempt_index)
{
    validate(config);
    core::Trajectory trajectory;
    trajectory.qa_id = qa.id;
    trajectory.cot_mode = config.cot_mode;
    trajectory.sampler_meta.model_id = config.model_id;
    trajectory.sampler_meta.attempt_index = attempt_index;
    trajectory.sampler_meta.sampling = config.sampling;

    std::string transcript;
    const auto fail = [&](RolloutFailureKind kind, std::string detail, int rounds) {
        return infoseek::unexpected(RolloutFailure{kind, std::move(detail), rounds, transcript});
    };

    for (int round = 1; round <= config.sampling.max_rounds; ++round) {
        clients::ChatRequest request;
        request.messages = build_context(qa, trajectory.steps, config.cot_mode, config.format, tools);
        request.sampling = config.sampling;
        request.model = config.model_id;

        clients::ChatResponse response;
        try {
            response = clients::chat(backend, request, config.retry);
        }
        catch (const clients::TransportError& e) {
            return fail(RolloutFailureKind::backend, e.what(), round);
        }
        transcript += response.content;
        transcript += '\n';

        auto turn = parse_turn(response.content, config.format);
        if (!turn)
            return fail(RolloutFailureKind::format, fmt::format("round {}: {}", round, turn.error()), round);

        const auto channel = response.reasoning_content.value_or("");
        std::string thought;
        if (const auto reasoning = core::trim(channel); !reasoning.empty()) {
            thought = std::string(reasoning);
        }
        else {
            thought = std::move(turn->thought);
            if (config.cot_mode == core::CotMode::long_cot)
                trajectory.sampler_meta.fallback_thought_steps.push_back(trajectory.steps.size());
        }

        if (turn->action.is_answer()) {
            trajectory.steps.push_back({std::move(thought), std::move(turn->action), std::nullopt});
            try {
                core::serialize_tagged(trajectory);
            }
            catch (const core::SerializationError& e) {
                return fail(RolloutFailureKind::format, e.what(), round);
            }
            return trajectory;
        }

        auto observation = tools.execute(turn->action);
        transcript += render_observation(observation, config.format);
        transcript += '\n';
        trajectory.steps.push_back({std::move(thought), std::move(turn->action), std::move(observation)});
    }
    return fail(RolloutFailureKind::no_answer,
                fmt::format("no answer after {} rounds", config.sampling.max_rounds), config.sampling.max_rounds);
}

Acceptor accept_any()
{
    return [](const core::QAPair&, const core::Trajectory&) -> std::optional<std::string> { return std::nullopt; };
}

std::string_view to_string(AttemptStatus status)
{
    switch (status) {
    case AttemptStatus::accepted: return "accepted";
    case AttemptStatus::rejected: return "rejected";
    case AttemptStatus::failed: return "failed";
    }
    return "failed";
}

AttemptStatus attempt_status_from_string(std::string_view text)
{
    if (text == "accepted")
        return AttemptStatus::accepted;
    if (text == "rejected")
        return AttemptStatus::rejected;
    if (text == "failed")
        return AttemptStatus::failed;
    throw core::SchemaError(fmt::format("unknown attempt status '{}'", text));
}

nlohmann::json attempt_to_json(const RolloutAttempt& attempt)
{
    return nlohmann::json{{"qa_id", attempt.qa_id},
                          {"attempt_index", attempt.attempt_index},
                          {"status", to_string(attempt.status)},
                          {"reason", attempt.reason},
                          {"rounds", attempt.rounds},
                          {"cot_mode", core::to_string(attempt.cot_mode)},
                          {"sampler_meta", nlohmann::json(attempt.sampler_meta)},
                          {"raw", attempt.raw}};
}

RolloutAttempt attempt_from_json(const nlohmann::json& record)
{
    RolloutAttempt attempt;
    try {
        attempt.qa_id = record.at("qa_id").get<std::string>();
        attempt.attempt_index = record.at("attempt_index").get<int>();
        attempt.status = attempt_status_from_string(record.at("status").get<std::string>());
        attempt.reason = record.value("reason", std::string{});
        attempt.rounds = record.value("rounds", 0);
        attempt.raw = record.at("raw").get<std::string>();
        if (record.contains("cot_mode"))
            attempt.cot_mode = core::cot_mode_from_string(record.at("cot_mode").get<std::string>());
        if (record.contains("sampler_meta"))
            attempt.sampler_meta = record.at("sampler_meta").get<core::SamplerMeta>();
    }
    catch (const nlohmann::json::exception& e) {
        throw core::SchemaError(fmt::format("attempt record: {}", e.what()));
    }
    if (attempt.attempt_index < 1)
        throw core::SchemaError(fmt::format("attempt record {}: attempt_index must be >= 1", attempt.qa_id));
    attempt.sampler_meta.attempt_index = attempt.attempt_index;
    return attempt;
}

SampleResult reject_sample(const core::QAPair& qa, clients::ChatBackend& backend, const ToolRegistry& tools,
                           const RolloutConfig& config, const Acceptor& acceptor)
{
    validate(config);
    SampleResult result;
    for (int attempt = 1; attempt <= config.rejection_budget; ++attempt) {
        auto outcome = run_react(qa, backend, tools, config, attempt);
        if (!outcome) {
            const auto& failure = outcome.error();
            core::SamplerMeta meta{config.model_id, attempt, config.sampling, {}};
            result.attempts.push_back({qa.id, attempt, AttemptStatus::failed,
                                       fmt::format("{}: {}", to_string(failure.kind), failure.detail),
                                       failure.transcript, failure.rounds, config.cot_mode, std::move(meta)});
            continue;
        }
        auto raw = core::serialize_tagged(*outcome);
        const auto rounds = static_cast<int>(outcome->steps.size());
        if (auto reason = acceptor(qa, *outcome)) {
            result.attempts.push_back({qa.id, attempt, AttemptStatus::rejected, *reason, std::move(raw), rounds,
                                       outcome->cot_mode, outcome->sampler_meta});
            continue;
        }
        result.attempts.push_back({qa.id, attempt, AttemptStatus::accepted, {}, std::move(raw), rounds,
                                   outcome->cot_mode, outcome->sampler_meta});
        result.accepted = std::move(*outcome);
        break;
    }
    return result;
}

std::vector<SampleResult> reject_sample_all(const std::vector<core::QAPair>& qas, clients::ChatBackend& backend,
                                            const ToolRegistry& tools, const RolloutConfig& config,
                                            const Acceptor& acceptor, int parallelism)
{
    std::vector<SampleResult> results(qas.size());
    core::parallel_for(qas.size(), parallelism,
                       [&](std::size_t i) { results[i] = reject_sample(qas[i], backend, tools, config, acceptor); });
    return results;
}

} // namespace infoseek::rollout
