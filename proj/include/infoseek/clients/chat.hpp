#pragma once

#include "infoseek/core/types.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoseek::clients {

struct ChatMessage {
    std::string role;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::vector<ChatMessage> messages;
    core::SamplingParams sampling;
    std::optional<nlohmann::json> tools;
    std::string model;
};

struct ChatResponse {
    std::string content;
    // Separate reasoning channel exposed by reasoning models.
    std::optional<std::string> reasoning_content;
    std::string finish_reason = "stop";

    bool operator==(const ChatResponse&) const = default;
};

// Failure worth retrying (timeouts, 429/5xx, dropped connections).
class TransientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failure that retrying cannot fix (bad request, exhausted script, ...).
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    // One completion attempt. Throws TransientError or BackendError.
    virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
    // Injected for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct AttemptRecord {
    int attempt = 0;
    bool ok = false;
    std::string error;
    std::chrono::milliseconds backoff{0};
};

// Retries exhausted (or a non-retriable failure); carries the attempt log.
class TransportError : public std::runtime_error {
public:
    TransportError(const std::string& message, std::vector<AttemptRecord> attempts)
        : std::runtime_error(message), attempts_(std::move(attempts))
    {
    }

    const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }

private:
    std::vector<AttemptRecord> attempts_;
};

// Runs `operation` with exponential backoff on TransientError. At most
// max_retries + 1 attempts are made. BackendError stops immediately.
void retry_with_backoff(const std::function<void()>& operation, const RetryPolicy& policy,
                        std::vector<AttemptRecord>* log = nullptr);

template <class F>
auto with_retries(F&& operation, const RetryPolicy& policy, std::vector<AttemptRecord>* log = nullptr)
{
    std::optional<decltype(operation())> result;
    retry_with_backoff([&] { result.emplace(operation()); }, policy, log);
    return std::move(*result);
}

// One completion with retries. Requests must have at least one message; a
// response with neither content nor reasoning is treated as transient.
ChatResponse chat(ChatBackend& backend, const ChatRequest& request, const RetryPolicy& policy = {},
                  std::vector<AttemptRecord>* log = nullptr);

// Convenience: single-user-message request.
ChatRequest user_request(std::string content, core::SamplingParams sampling = {});

} // namespace infoseek::clients
