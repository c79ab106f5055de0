#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/core/result.hpp"
#include "infoseek/core/types.hpp"
#include "infoseek/eval/judge.hpp"
#include "infoseek/rollout/completion.hpp"
#include "infoseek/rollout/react.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace infoseek::filter {

enum class Stage { validity, correctness, quality };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

namespace reasons {
inline constexpr std::string_view parse_fail = "PARSE_FAIL";
inline constexpr std::string_view judge_wrong = "JUDGE_WRONG";
inline constexpr std::string_view ngram_repeat = "NGRAM_REPEAT";
inline constexpr std::string_view too_few_actions = "TOO_FEW_ACTIONS";
inline constexpr std::string_view too_many_actions = "TOO_MANY_ACTIONS";
inline constexpr std::string_view hallucinated_tool = "HALLUCINATED_TOOL";
inline constexpr std::string_view judge_quality_fail = "JUDGE_QUALITY_FAIL";
} // namespace reasons

struct FilterVerdict {
    Stage stage = Stage::validity;
    bool passed = false;
    // Empty iff passed.
    std::vector<std::string> reasons;
    std::string detail;

    static FilterVerdict pass(Stage stage) { return {stage, true, {}, {}}; }
    static FilterVerdict fail(Stage stage, std::vector<std::string> reasons, std::string detail = {})
    {
        return {stage, false, std::move(reasons), std::move(detail)};
    }

    bool operator==(const FilterVerdict&) const = default;
};

void to_json(nlohmann::json& out, const FilterVerdict& verdict);

// Parses raw attempt text with the tagged codec or the prompt-format codec.
Result<core::Trajectory, FilterVerdict> check_validity(
    std::string_view raw, rollout::CompletionFormat format = rollout::CompletionFormat::tagged);

// Judge-authoritative answer check. Judge failures propagate
// (clients::TransportError, eval::JudgeError).
FilterVerdict check_correctness(const core::Trajectory& trajectory, const core::QAPair& qa,
                                clients::ChatBackend& judge, const eval::JudgeOptions& options = {});

// Maximum multiplicity over all contiguous n-token windows of the
// lowercased, whitespace-split text; 0 when there are fewer than n tokens.
int ngram_max_count(std::string_view text, int n);

struct QualityRules {
    int ngram_n = 10;
    // Fails when the most frequent n-gram occurs more often than this.
    int ngram_threshold = 4;
    // Counted over all steps, the answer included.
    int min_actions = 2;
    std::optional<int> max_actions;
    // Tools the agent was offered; anything else is a hallucination.
    std::vector<core::ToolName> registry{core::ToolName::search, core::ToolName::visit};
    bool use_judge = true;
};

// Thoughts and the final answer, newline-joined (the n-gram rule's input).
std::string reasoning_text(const core::Trajectory& trajectory);

// Parses the quality judge reply; throws eval::JudgeError when a criterion
// is missing or not boolean. Returns the names of failed criteria.
std::vector<std::string> parse_quality_reply(std::string_view reply);

// Rule stage first; the judge is consulted only when every rule passes.
FilterVerdict check_quality(const core::Trajectory& trajectory, const core::QAPair& qa, clients::ChatBackend& judge,
                            const QualityRules& rules = {}, const eval::JudgeOptions& options = {});

// Rejection-sampling acceptor: correctness then quality on the completed
// episode. The rejection reason lists the failing reason codes.
rollout::Acceptor funnel_acceptor(clients::ChatBackend& judge, QualityRules rules = {},
                                  eval::JudgeOptions options = {});

// Offline judge for both filter prompts. Correctness prompts are graded by
// eval::ReferenceMatchJudge. Quality prompts are graded on the rendered
// trajectory: no tool call is repeated verbatim (non-redundancy), no
// observation is a tool error (goal alignment), and the final answer occurs
// in some observation (reasoning grounded in evidence).
class OfflineJudge : public clients::ChatBackend {
public:
    clients::ChatResponse complete(const clients::ChatRequest& request) override;

private:
    eval::ReferenceMatchJudge correctness_;
};

struct FunnelSample {
    core::QAPair qa;
    std::vector<rollout::RolloutAttempt> attempts;
};

struct AuditEntry {
    std::string qa_id;
    int attempt_index = 1;
    // One verdict per stage reached, in stage order.
    std::vector<FilterVerdict> verdicts;
    bool survived = false;
};

void to_json(nlohmann::json& out, const AuditEntry& entry);

struct FunnelOptions {
    QualityRules rules;
    eval::JudgeOptions judge;
    rollout::CompletionFormat format = rollout::CompletionFormat::tagged;
    int parallelism = 1;
};

struct FunnelResult {
    std::vector<core::Trajectory> sft_set;
    std::vector<core::QAPair> rl_qa_set;
    // Sorted by (qa_id, attempt_index).
    std::vector<AuditEntry> audit;
};

// Runs every attempt through validity -> correctness -> quality. Each QA
// contributes its lowest-index survivor to sft_set, or itself to rl_qa_set
// when nothing survives. Output sets follow input order. Throws
// std::invalid_argument for duplicate QA ids.
FunnelResult funnel(const std::vector<FunnelSample>& samples, clients::ChatBackend& judge,
                    const FunnelOptions& options = {});

} // namespace infoseek::filter
