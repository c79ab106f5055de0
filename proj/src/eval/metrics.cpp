#include "infoseek/eval/metrics.hpp"

#include "infoseek/core/parallel.hpp"
#include "infoseek/core/types.hpp"

#include <fmt/format.h>

#include <charconv>
#include <stdexcept>

namespace infoseek::eval {

void to_json(nlohmann::json& out, const RunOutcome& outcome)
{
    nlohmann::json attempts = nlohmann::json::array();
    for (const auto& attempt : outcome.attempts) {
        nlohmann::json item{{"final_answer", attempt.final_answer}};
        if (attempt.correct)
            item["correct"] = *attempt.correct;
        attempts.push_back(std::move(item));
    }
    out = nlohmann::json{{"qa_id", outcome.qa_id}, {"attempts", std::move(attempts)}};
    if (!outcome.question.empty())
        out["question"] = outcome.question;
    if (!outcome.reference.empty())
        out["reference"] = outcome.reference;
}

void from_json(const nlohmann::json& in, RunOutcome& outcome)
{
    try {
        outcome = RunOutcome{};
        outcome.qa_id = in.at("qa_id").get<std::string>();
        outcome.question = in.value("question", std::string{});
        outcome.reference = in.value("reference", std::string{});
        for (const auto& item : in.at("attempts")) {
            AttemptOutcome attempt;
            attempt.final_answer = item.at("final_answer").get<std::string>();
            if (item.contains("correct") && !item.at("correct").is_null())
                attempt.correct = item.at("correct").get<bool>();
            outcome.attempts.push_back(std::move(attempt));
        }
    }
    catch (const nlohmann::json::exception& e) {
        throw core::SchemaError(fmt::format("run outcome: {}", e.what()));
    }
    if (outcome.attempts.empty())
        throw core::SchemaError(fmt::format("run outcome {}: attempts is empty", outcome.qa_id));
}

void judge_outcomes(std::vector<RunOutcome>& outcomes, clients::ChatBackend& judge, const JudgeOptions& options,
                    int parallelism)
{
    struct Slot {
        RunOutcome* outcome;
        AttemptOutcome* attempt;
    };
    std::vector<Slot> pending;
    for (auto& outcome : outcomes) {
        for (auto& attempt : outcome.attempts) {
            if (attempt.correct)
                continue;
            if (outcome.reference.empty())
                throw std::invalid_argument(fmt::format("run outcome {} has no reference answer to judge against",
                                                        outcome.qa_id));
            pending.push_back({&outcome, &attempt});
        }
    }
    core::parallel_for(pending.size(), parallelism, [&](std::size_t i) {
        auto& [outcome, attempt] = pending[i];
        attempt->correct =
            judge_answer(outcome->question, attempt->final_answer, outcome->reference, judge, options);
    });
}

namespace {

bool correct(const RunOutcome& outcome, std::size_t i)
{
    const auto& attempt = outcome.attempts[i];
    if (!attempt.correct)
        throw std::invalid_argument(fmt::format("run outcome {} attempt {} is not judged", outcome.qa_id, i + 1));
    return *attempt.correct;
}

} // namespace

double pass_at_k(const std::vector<RunOutcome>& outcomes, int k)
{
    if (k < 1)
        throw std::invalid_argument("k must be >= 1");
    if (outcomes.empty())
        throw std::invalid_argument("no run outcomes");
    double hits = 0;
    for (const auto& outcome : outcomes) {
        if (outcome.attempts.size() < static_cast<std::size_t>(k))
            throw std::invalid_argument(fmt::format("run outcome {} has {} attempts, pass@{} needs {}", outcome.qa_id,
                                                    outcome.attempts.size(), k, k));
        bool any = false;
        for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i)
            any = correct(outcome, i) || any;
        hits += any ? 1.0 : 0.0;
    }
    return hits / static_cast<double>(outcomes.size());
}

double cons_at_3(const std::vector<RunOutcome>& outcomes)
{
    if (outcomes.empty())
        throw std::invalid_argument("no run outcomes");
    double total = 0;
    for (const auto& outcome : outcomes) {
        if (outcome.attempts.size() != 3)
            throw std::invalid_argument(fmt::format("run outcome {} has {} attempts, cons@3 needs exactly 3",
                                                    outcome.qa_id, outcome.attempts.size()));
        int hits = 0;
        for (std::size_t i = 0; i < 3; ++i)
            hits += correct(outcome, i) ? 1 : 0;
        total += hits / 3.0;
    }
    return total / static_cast<double>(outcomes.size());
}

std::map<std::string, double> compute_metrics(const std::vector<RunOutcome>& outcomes,
                                              const std::vector<std::string>& metrics)
{
    std::map<std::string, double> report;
    for (const auto& metric : metrics) {
        if (metric == "cons@3") {
            report[metric] = cons_at_3(outcomes);
            continue;
        }
        int k = 0;
        if (metric.starts_with("pass@")) {
            const auto* begin = metric.data() + 5;
            const auto* end = metric.data() + metric.size();
            const auto [ptr, ec] = std::from_chars(begin, end, k);
            if (ec == std::errc{} && ptr == end && k >= 1) {
                report[metric] = pass_at_k(outcomes, k);
                continue;
            }
        }
        throw std::invalid_argument(fmt::format("unknown metric '{}' (expected pass@<k> or cons@3)", metric));
    }
    return report;
}

} // namespace infoseek::eval
