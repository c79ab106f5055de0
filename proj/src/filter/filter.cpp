#include "infoseek/filter/filter.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/parallel.hpp"
#include "infoseek/core/prompts.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace infoseek::filter {

using nlohmann::json;

std::string_view to_string(Stage stage)
{
    switch (stage) {
    case Stage::validity:
        return "validity";
    case Stage::correctness:
        return "correctness";
    case Stage::quality:
        return "quality";
    }
    return "validity";
}

Stage stage_from_string(std::string_view text)
{
    if (text == "validity")
        return Stage::validity;
    if (text == "correctness")
        return Stage::correctness;
    if (text == "quality")
        return Stage::quality;
    throw core::SchemaError(fmt::format("unknown filter stage '{}'", text));
}

void to_json(json& out, const FilterVerdict& verdict)
{
    out = json{{"stage", to_string(verdict.stage)}, {"passed", verdict.passed}, {"reasons", verdict.reasons}};
    if (!verdict.detail.empty())
        out["detail"] = verdict.detail;
}

void to_json(json& out, const AuditEntry& entry)
{
    out = json{{"qa_id", entry.qa_id},
               {"attempt_index", entry.attempt_index},
               {"verdicts", entry.verdicts},
               {"survived", entry.survived}};
}

Result<core::Trajectory, FilterVerdict> check_validity(std::string_view raw, rollout::CompletionFormat format)
{
    const auto fail = [](std::string detail) {
        return unexpected(FilterVerdict::fail(Stage::validity, {std::string(reasons::parse_fail)}, std::move(detail)));
    };
    if (format == rollout::CompletionFormat::prompt) {
        auto parsed = rollout::parse_prompt_transcript(raw);
        if (!parsed)
            return fail(parsed.error());
        return std::move(parsed).value();
    }
    auto parsed = core::parse_tagged(raw);
    if (!parsed)
        return fail(parsed.error().message());
    return std::move(parsed).value();
}

FilterVerdict check_correctness(const core::Trajectory& trajectory, const core::QAPair& qa,
                                clients::ChatBackend& judge, const eval::JudgeOptions& options)
{
    if (trajectory.steps.empty() || !trajectory.steps.back().action.is_answer())
        throw std::invalid_argument("check_correctness needs a trajectory ending in an answer");
    const auto& prediction = trajectory.final_answer().final_answer;
    if (eval::judge_answer(qa.question, prediction, qa.answer, judge, options))
        return FilterVerdict::pass(Stage::correctness);
    return FilterVerdict::fail(Stage::correctness, {std::string(reasons::judge_wrong)},
                               fmt::format("judged '{}' against reference '{}'", prediction, qa.answer));
}

int ngram_max_count(std::string_view text, int n)
{
    if (n < 1)
        throw std::invalid_argument("n-gram size must be at least 1");
    const auto lowered = core::to_lower(text);
    const auto tokens = core::split_whitespace(lowered);
    const auto width = static_cast<std::size_t>(n);
    if (tokens.size() < width)
        return 0;
    std::map<std::vector<std::string_view>, int> counts;
    int best = 0;
    for (std::size_t i = 0; i + width <= tokens.size(); ++i) {
        std::vector<std::string_view> window(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                             tokens.begin() + static_cast<std::ptrdiff_t>(i + width));
        best = std::max(best, ++counts[std::move(window)]);
    }
    return best;
}

std::string reasoning_text(const core::Trajectory& trajectory)
{
    std::string text;
    for (const auto& step : trajectory.steps) {
        if (!text.empty())
            text += '\n';
        text += step.thought;
    }
    if (!trajectory.steps.empty() && trajectory.steps.back().action.is_answer())
        text += '\n' + trajectory.final_answer().final_answer;
    return text;
}

std::vector<std::string> parse_quality_reply(std::string_view reply)
{
    const auto object = core::extract_json_object(reply);
    if (!object)
        throw eval::JudgeError("quality judge reply holds no JSON object");
    std::vector<std::string> failed;
    for (const char* key : {"information_non_redundancy", "goal_alignment", "logical_reasoning"}) {
        const auto it = object->find(key);
        if (it == object->end() || !it->is_boolean())
            throw eval::JudgeError(fmt::format("quality judge reply lacks boolean '{}'", key));
        if (!it->get<bool>())
            failed.emplace_back(key);
    }
    return failed;
}

FilterVerdict check_quality(const core::Trajectory& trajectory, const core::QAPair& qa, clients::ChatBackend& judge,
                            const QualityRules& rules, const eval::JudgeOptions& options)
{
    std::vector<std::string> failed;
    std::vector<std::string> details;

    const int repeats = ngram_max_count(reasoning_text(trajectory), rules.ngram_n);
    if (repeats > rules.ngram_threshold) {
        failed.emplace_back(reasons::ngram_repeat);
        details.push_back(fmt::format("a {}-gram occurs {} times", rules.ngram_n, repeats));
    }

    const auto actions = static_cast<int>(trajectory.steps.size());
    if (actions < rules.min_actions) {
        failed.emplace_back(reasons::too_few_actions);
        details.push_back(fmt::format("{} actions < {}", actions, rules.min_actions));
    }
    if (rules.max_actions && actions > *rules.max_actions) {
        failed.emplace_back(reasons::too_many_actions);
        details.push_back(fmt::format("{} actions > {}", actions, *rules.max_actions));
    }

    std::set<std::string_view> unknown;
    for (const auto& step : trajectory.steps) {
        const auto name = step.action.name();
        if (name == core::ToolName::answer)
            continue;
        if (std::find(rules.registry.begin(), rules.registry.end(), name) == rules.registry.end())
            unknown.insert(core::to_string(name));
    }
    if (!unknown.empty()) {
        failed.emplace_back(reasons::hallucinated_tool);
        details.push_back(fmt::format("tools outside the registry: {}", fmt::join(unknown, ", ")));
    }

    if (!failed.empty())
        return FilterVerdict::fail(Stage::quality, std::move(failed), fmt::format("{}", fmt::join(details, "; ")));
    if (!rules.use_judge)
        return FilterVerdict::pass(Stage::quality);

    auto request = clients::user_request(
        core::render_template(core::prompts::judge_quality.text,
                              {{"question", qa.question},
                               {"reference", qa.answer},
                               {"trajectory", rollout::render_prompt_transcript(trajectory.steps)}}),
        options.sampling);
    request.model = options.model;
    const auto reply = clients::chat(judge, request, options.retry);
    const auto criteria = parse_quality_reply(reply.content);
    if (criteria.empty())
        return FilterVerdict::pass(Stage::quality);
    return FilterVerdict::fail(Stage::quality, {std::string(reasons::judge_quality_fail)},
                               fmt::format("failed criteria: {}", fmt::join(criteria, ", ")));
}

rollout::Acceptor funnel_acceptor(clients::ChatBackend& judge, QualityRules rules, eval::JudgeOptions options)
{
    return [&judge, rules = std::move(rules), options = std::move(options)](
               const core::QAPair& qa, const core::Trajectory& trajectory) -> std::optional<std::string> {
        auto verdict = check_correctness(trajectory, qa, judge, options);
        if (verdict.passed)
            verdict = check_quality(trajectory, qa, judge, rules, options);
        if (verdict.passed)
            return std::nullopt;
        return fmt::format("{}: {}", to_string(verdict.stage), fmt::join(verdict.reasons, ","));
    };
}

clients::ChatResponse OfflineJudge::complete(const clients::ChatRequest& request)
{
    if (request.messages.empty())
        throw clients::BackendError("empty judge request");
    const auto& prompt = request.messages.back().content;
    constexpr std::string_view open = "\nTrajectory:\n";
    constexpr std::string_view close = "\n\nReply with one JSON object";
    const auto begin = prompt.find(open);
    const auto end = prompt.rfind(close);
    if (begin == std::string::npos || end == std::string::npos || end < begin + open.size())
        return correctness_.complete(request);

    const auto transcript = std::string_view(prompt).substr(begin + open.size(), end - begin - open.size());
    auto parsed = rollout::parse_prompt_transcript(transcript);
    if (!parsed)
        return {"The trajectory could not be read.", std::nullopt, "stop"};
    const auto& steps = parsed->steps;

    std::set<std::string> calls;
    bool non_redundant = true;
    bool aligned = true;
    std::string evidence;
    for (const auto& step : steps) {
        if (step.action.is_answer())
            continue;
        non_redundant &= calls.insert(core::action_to_json(step.action).dump()).second;
        if (step.observation) {
            aligned &= !core::is_tool_error(*step.observation);
            evidence += core::to_lower(core::observation_to_json(*step.observation).dump());
            evidence += '\n';
        }
    }
    const auto answer = core::to_lower(core::trim(parsed->final_answer().final_answer));
    const bool grounded = !answer.empty() && core::contains(evidence, answer);
    const json verdict{
        {"information_non_redundancy", non_redundant}, {"goal_alignment", aligned}, {"logical_reasoning", grounded}};
    return {verdict.dump(), std::nullopt, "stop"};
}

namespace {

struct Evaluated {
    AuditEntry entry;
    std::optional<core::Trajectory> trajectory;
};

Evaluated evaluate(const core::QAPair& qa, const rollout::RolloutAttempt& attempt, clients::ChatBackend& judge,
                   const FunnelOptions& options)
{
    Evaluated out;
    out.entry.qa_id = qa.id;
    out.entry.attempt_index = attempt.attempt_index;

    auto parsed = check_validity(attempt.raw, options.format);
    if (!parsed) {
        out.entry.verdicts.push_back(parsed.error());
        return out;
    }
    auto trajectory = std::move(parsed).value();
    trajectory.qa_id = qa.id;
    trajectory.cot_mode = attempt.cot_mode;
    trajectory.sampler_meta = attempt.sampler_meta;
    trajectory.sampler_meta.attempt_index = attempt.attempt_index;
    out.entry.verdicts.push_back(FilterVerdict::pass(Stage::validity));

    auto correctness = check_correctness(trajectory, qa, judge, options.judge);
    out.entry.verdicts.push_back(correctness);
    if (!correctness.passed)
        return out;

    auto quality = check_quality(trajectory, qa, judge, options.rules, options.judge);
    out.entry.verdicts.push_back(quality);
    if (!quality.passed)
        return out;

    out.entry.survived = true;
    out.trajectory = std::move(trajectory);
    return out;
}

} // namespace

FunnelResult funnel(const std::vector<FunnelSample>& samples, clients::ChatBackend& judge,
                    const FunnelOptions& options)
{
    std::set<std::string> ids;
    struct Job {
        std::size_t sample;
        std::size_t attempt;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (!ids.insert(samples[s].qa.id).second)
            throw std::invalid_argument(fmt::format("duplicate QA id '{}' in funnel input", samples[s].qa.id));
        std::set<int> indices;
        for (std::size_t a = 0; a < samples[s].attempts.size(); ++a) {
            if (!indices.insert(samples[s].attempts[a].attempt_index).second)
                throw std::invalid_argument(fmt::format("QA '{}' has attempt {} twice", samples[s].qa.id,
                                                        samples[s].attempts[a].attempt_index));
            jobs.push_back({s, a});
        }
    }

    std::vector<Evaluated> evaluated(jobs.size());
    core::parallel_for(jobs.size(), options.parallelism, [&](std::size_t i) {
        const auto& sample = samples[jobs[i].sample];
        evaluated[i] = evaluate(sample.qa, sample.attempts[jobs[i].attempt], judge, options);
    });

    FunnelResult result;
    std::vector<const Evaluated*> best(samples.size(), nullptr);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        const auto& candidate = evaluated[i];
        auto& slot = best[jobs[i].sample];
        if (candidate.entry.survived && (!slot || candidate.entry.attempt_index < slot->entry.attempt_index))
            slot = &candidate;
    }
    for (std::size_t s = 0; s < samples.size(); ++s) {
        if (best[s])
            result.sft_set.push_back(*best[s]->trajectory);
        else
            result.rl_qa_set.push_back(samples[s].qa);
    }
    for (auto& item : evaluated)
        result.audit.push_back(std::move(item.entry));
    std::sort(result.audit.begin(), result.audit.end(), [](const AuditEntry& a, const AuditEntry& b) {
        return std::tie(a.qa_id, a.attempt_index) < std::tie(b.qa_id, b.attempt_index);
    });
    return result;
}

} // namespace infoseek::filter
