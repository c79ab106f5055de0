#include "infoseek/clients/chat.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <thread>

namespace infoseek::clients {

void retry_with_backoff(const std::function<void()>& operation, const RetryPolicy& policy,
                        std::vector<AttemptRecord>* log)
{
    std::vector<AttemptRecord> attempts;
    auto backoff = policy.initial_backoff;
    const int max_attempts = std::max(0, policy.max_retries) + 1;
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        try {
            operation();
            attempts.push_back({attempt, true, {}, std::chrono::milliseconds{0}});
            if (log)
                *log = std::move(attempts);
            return;
        }
        catch (const TransientError& e) {
            const bool last = attempt == max_attempts;
            attempts.push_back({attempt, false, e.what(), last ? std::chrono::milliseconds{0} : backoff});
            if (last)
                break;
            if (policy.sleep)
                policy.sleep(backoff);
            else
                std::this_thread::sleep_for(backoff);
            backoff = std::min(policy.max_backoff,
                               std::chrono::milliseconds{static_cast<long long>(backoff.count() * policy.multiplier)});
        }
        catch (const BackendError& e) {
            attempts.push_back({attempt, false, e.what(), std::chrono::milliseconds{0}});
            if (log)
                *log = attempts;
            throw TransportError(fmt::format("non-retriable failure: {}", e.what()), std::move(attempts));
        }
    }
    if (log)
        *log = attempts;
    const auto last_error = attempts.empty() ? std::string{} : attempts.back().error;
    throw TransportError(fmt::format("gave up after {} attempts: {}", attempts.size(), last_error), std::move(attempts));
}

ChatResponse chat(ChatBackend& backend, const ChatRequest& request, const RetryPolicy& policy,
                  std::vector<AttemptRecord>* log)
{
    if (request.messages.empty())
        throw std::invalid_argument("chat request has no messages");
    return with_retries(
        [&] {
            auto response = backend.complete(request);
            if (response.content.empty() && response.reasoning_content.value_or("").empty())
                throw TransientError("empty completion");
            return response;
        },
        policy, log);
}

ChatRequest user_request(std::string content, core::SamplingParams sampling)
{
    ChatRequest request;
    request.messages.push_back({"user", std::move(content)});
    request.sampling = sampling;
    return request;
}

} // namespace infoseek::clients
