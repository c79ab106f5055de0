#pragma once

#include "infoseek/clients/chat.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace infoseek::eval {

// The judge replied, but not with a recognizable verdict.
class JudgeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JudgeOptions {
    std::string model;
    core::SamplingParams sampling{0.0, 1.0, 1.0, 1};
    clients::RetryPolicy retry;
};

// Reads a "verdict: CORRECT|INCORRECT" line; without one, a reply that
// contains exactly one of the two words is accepted.
std::optional<bool> parse_verdict(std::string_view reply);

// Asks the judge whether `prediction` matches `reference`. Transport
// failures propagate as TransportError, unreadable replies as JudgeError.
bool judge_answer(std::string_view question, std::string_view prediction, std::string_view reference,
                  clients::ChatBackend& judge, const JudgeOptions& options = {});

// Case/punctuation/whitespace-insensitive comparison used by the offline
// judge. Numbers compare by value ("1,000" == "1000.0").
bool lenient_match(std::string_view prediction, std::string_view reference);

// Offline judge: reads the prediction and reference out of the rendered
// correctness prompt and answers by lenient_match.
class ReferenceMatchJudge : public clients::ChatBackend {
public:
    clients::ChatResponse complete(const clients::ChatRequest& request) override;
};

} // namespace infoseek::eval
