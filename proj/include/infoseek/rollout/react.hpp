#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/core/result.hpp"
#include "infoseek/core/types.hpp"
#include "infoseek/rollout/completion.hpp"
#include "infoseek/rollout/tools.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace infoseek::rollout {

struct RolloutConfig {
    int rejection_budget = 5;
    core::SamplingParams sampling{0.6, 0.95, 1.1, 30};
    core::CotMode cot_mode = core::CotMode::short_cot;
    CompletionFormat format = CompletionFormat::prompt;
    std::string model_id;
    clients::RetryPolicy retry;
};

// Throws std::invalid_argument naming the first bad field.
void validate(const RolloutConfig& config);

// The message sequence for the next round. Short mode replays every
// (thought, action, observation); long mode drops prior thoughts.
std::vector<clients::ChatMessage> build_context(const core::QAPair& qa, const std::vector<core::Step>& history,
                                                core::CotMode cot_mode, CompletionFormat format,
                                                const ToolRegistry& tools);

enum class RolloutFailureKind { format, no_answer, backend };

std::string_view to_string(RolloutFailureKind kind);

struct RolloutFailure {
    RolloutFailureKind kind = RolloutFailureKind::format;
    std::string detail;
    int rounds = 0;
    // What the model produced, rendered round by round (for the audit log).
    std::string transcript;
};

// One ReAct episode, at most sampling.max_rounds completions.
Result<core::Trajectory, RolloutFailure> run_react(const core::QAPair& qa, clients::ChatBackend& backend,
                                                         const ToolRegistry& tools, const RolloutConfig& config,
                                                         int attempt_index = 1);

// Returns std::nullopt to accept, else the rejection reason.
using Acceptor = std::function<std::optional<std::string>(const core::QAPair&, const core::Trajectory&)>;

Acceptor accept_any();

enum class AttemptStatus { accepted, rejected, failed };

std::string_view to_string(AttemptStatus status);
AttemptStatus attempt_status_from_string(std::string_view text);

struct RolloutAttempt {
    std::string qa_id;
    int attempt_index = 1;
    AttemptStatus status = AttemptStatus::failed;
    std::string reason;
    // Tagged serialization for completed episodes, transcript otherwise.
    std::string raw;
    int rounds = 0;
    core::CotMode cot_mode = core::CotMode::short_cot;
    core::SamplerMeta sampler_meta;
};

// Attempt-log JSONL record:
//   {"qa_id", "attempt_index", "status", "reason", "rounds", "cot_mode", "sampler_meta", "raw"}
nlohmann::json attempt_to_json(const RolloutAttempt& attempt);
RolloutAttempt attempt_from_json(const nlohmann::json& record);

struct SampleResult {
    std::optional<core::Trajectory> accepted;
    std::vector<RolloutAttempt> attempts;
};

// Up to rejection_budget episodes; stops at the first accepted one.
SampleResult reject_sample(const core::QAPair& qa, clients::ChatBackend& backend, const ToolRegistry& tools,
                           const RolloutConfig& config, const Acceptor& acceptor);

// reject_sample over many questions; results are in input order.
std::vector<SampleResult> reject_sample_all(const std::vector<core::QAPair>& qas, clients::ChatBackend& backend,
                                            const ToolRegistry& tools, const RolloutConfig& config,
                                            const Acceptor& acceptor, int parallelism = 1);

} // namespace infoseek::rollout
