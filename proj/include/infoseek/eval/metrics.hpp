#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/eval/judge.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace infoseek::eval {

struct AttemptOutcome {
    std::string final_answer;
    // Unset until judged.
    std::optional<bool> correct;

    bool operator==(const AttemptOutcome&) const = default;
};

struct RunOutcome {
    std::string qa_id;
    std::string question;
    std::string reference;
    std::vector<AttemptOutcome> attempts;

    bool operator==(const RunOutcome&) const = default;
};

void to_json(nlohmann::json& out, const RunOutcome& outcome);
void from_json(const nlohmann::json& in, RunOutcome& outcome);

// Judges every attempt whose correctness is unset. Outcomes without a
// reference answer cannot be judged and raise std::invalid_argument.
void judge_outcomes(std::vector<RunOutcome>& outcomes, clients::ChatBackend& judge, const JudgeOptions& options = {},
                    int parallelism = 1);

// Fraction of questions with at least one correct answer among their first
// k attempts. Throws std::invalid_argument when a question has fewer than k
// attempts, an attempt is unjudged, or there are no questions.
double pass_at_k(const std::vector<RunOutcome>& outcomes, int k);

// Mean per-question fraction of correct answers over exactly 3 attempts.
double cons_at_3(const std::vector<RunOutcome>& outcomes);

// Evaluates metric names like "pass@1", "pass@3", "cons@3".
std::map<std::string, double> compute_metrics(const std::vector<RunOutcome>& outcomes,
                                              const std::vector<std::string>& metrics);

} // namespace infoseek::eval
