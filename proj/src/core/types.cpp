#include "infoseek/core/types.hpp"

#include "infoseek/core/url.hpp"

#include <fmt/format.h>

#include <cmath>

namespace infoseek::core {

std::string_view to_string(QaSource source)
{
    switch (source) {
    case QaSource::crawl: return "crawl";
    case QaSource::e2h: return "e2h";
    case QaSource::open: return "open";
    }
    return "open";
}

std::string_view to_string(QuestionType type)
{
    switch (type) {
    case QuestionType::count: return "COUNT";
    case QuestionType::multi_hop: return "MULTI_HOP";
    case QuestionType::intersection: return "INTERSECTION";
    case QuestionType::other: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(ToolName name)
{
    switch (name) {
    case ToolName::search: return "search";
    case ToolName::visit: return "visit";
    case ToolName::answer: return "answer";
    }
    return "answer";
}

std::string_view to_string(CotMode mode)
{
    return mode == CotMode::long_cot ? "long" : "short";
}

QaSource qa_source_from_string(std::string_view text)
{
    if (text == "crawl")
        return QaSource::crawl;
    if (text == "e2h")
        return QaSource::e2h;
    if (text == "open")
        return QaSource::open;
    throw SchemaError(fmt::format("unknown QA source '{}'", text));
}

QuestionType question_type_from_string(std::string_view text)
{
    if (text == "COUNT")
        return QuestionType::count;
    if (text == "MULTI_HOP" || text == "MULTI-HOP")
        return QuestionType::multi_hop;
    if (text == "INTERSECTION")
        return QuestionType::intersection;
    if (text == "OTHER")
        return QuestionType::other;
    throw SchemaError(fmt::format("unknown question type '{}'", text));
}

std::optional<ToolName> tool_name_from_string(std::string_view text)
{
    if (text == "search")
        return ToolName::search;
    if (text == "visit")
        return ToolName::visit;
    if (text == "answer")
        return ToolName::answer;
    return std::nullopt;
}

CotMode cot_mode_from_string(std::string_view text)
{
    if (text == "short")
        return CotMode::short_cot;
    if (text == "long")
        return CotMode::long_cot;
    throw SchemaError(fmt::format("unknown CoT mode '{}' (expected short|long)", text));
}

std::optional<std::string> validate(const QAPair& qa)
{
    if (qa.id.empty())
        return "QAPair id is empty";
    if (qa.answer.empty())
        return fmt::format("QAPair {}: answer is empty", qa.id);
    if (qa.e2h_iterations < 0)
        return fmt::format("QAPair {}: e2h_iterations is negative", qa.id);
    if (qa.e2h_iterations > 0 && qa.source != QaSource::e2h)
        return fmt::format("QAPair {}: e2h_iterations > 0 requires source e2h", qa.id);
    return std::nullopt;
}

ActionCall ActionCall::search(std::string query, std::optional<int> filter_year)
{
    return ActionCall{SearchArgs{std::move(query), filter_year}};
}

ActionCall ActionCall::visit(std::string goal, std::string url_link)
{
    return ActionCall{VisitArgs{std::move(goal), std::move(url_link)}};
}

ActionCall ActionCall::answer(std::string final_answer)
{
    return ActionCall{AnswerArgs{std::move(final_answer)}};
}

std::optional<std::string> validate(const ActionCall& action)
{
    if (const auto* search = std::get_if<SearchArgs>(&action.args)) {
        if (search->query.empty())
            return "search.query is empty";
    }
    else if (const auto* visit = std::get_if<VisitArgs>(&action.args)) {
        if (visit->goal.empty())
            return "visit.goal is empty";
        if (!is_absolute_url(visit->url_link))
            return fmt::format("visit.url_link '{}' is not an absolute URL", visit->url_link);
    }
    return std::nullopt;
}

Observation tool_error_observation(std::string_view message)
{
    return VisitObservation{"", fmt::format("{}{}", kToolErrorPrefix, message)};
}

bool is_tool_error(const Observation& observation)
{
    const auto* visit = std::get_if<VisitObservation>(&observation);
    return visit && visit->evidence.empty() && visit->summary.starts_with(kToolErrorPrefix);
}

std::optional<std::string> validate(const SamplingParams& params)
{
    if (!(params.temperature >= 0.0) || !std::isfinite(params.temperature))
        return "sampling.temperature must be >= 0";
    if (!(params.top_p > 0.0 && params.top_p <= 1.0))
        return "sampling.top_p must be in (0, 1]";
    if (!(params.repetition_penalty >= 1.0) || !std::isfinite(params.repetition_penalty))
        return "sampling.repetition_penalty must be >= 1";
    if (params.max_rounds < 1)
        return "sampling.max_rounds must be >= 1";
    return std::nullopt;
}

const AnswerArgs& Trajectory::final_answer() const
{
    if (steps.empty() || !steps.back().action.is_answer())
        throw SchemaError(fmt::format("trajectory {} has no terminal answer", qa_id));
    return std::get<AnswerArgs>(steps.back().action.args);
}

std::optional<std::string> validate(const Trajectory& trajectory, std::optional<int> rejection_budget)
{
    if (trajectory.steps.empty())
        return "steps is empty";
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const auto& step = trajectory.steps[i];
        const bool last = i + 1 == trajectory.steps.size();
        if (step.action.is_answer() != last)
            return last ? fmt::format("step {}: last step is not an answer action", i)
                        : fmt::format("step {}: answer action before the last step", i);
        if (step.observation.has_value() == step.action.is_answer())
            return step.action.is_answer()
                       ? fmt::format("step {}: answer step carries an observation", i)
                       : fmt::format("step {}: non-answer step has no observation", i);
        if (auto issue = validate(step.action))
            return fmt::format("step {}: {}", i, *issue);
        if (step.observation) {
            if (const auto* search = std::get_if<SearchObservation>(&*step.observation)) {
                if (search->results.size() > kMaxSearchResults)
                    return fmt::format("step {}: search observation has {} results (max {})", i,
                                       search->results.size(), kMaxSearchResults);
                if (step.action.name() != ToolName::search)
                    return fmt::format("step {}: search observation after a {} action", i,
                                       to_string(step.action.name()));
            }
            else if (step.action.name() == ToolName::search && !is_tool_error(*step.observation)) {
                return fmt::format("step {}: visit observation after a search action", i);
            }
        }
    }
    if (trajectory.sampler_meta.attempt_index < 1)
        return "sampler_meta.attempt_index must be >= 1";
    if (rejection_budget && trajectory.sampler_meta.attempt_index > *rejection_budget)
        return fmt::format("sampler_meta.attempt_index {} exceeds rejection budget {}",
                           trajectory.sampler_meta.attempt_index, *rejection_budget);
    return std::nullopt;
}

} // namespace infoseek::core
