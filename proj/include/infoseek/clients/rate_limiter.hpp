#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace infoseek::clients {

// Per-host request spacing. The single synchronization point shared by all
// network-facing backends; safe for concurrent callers.
class HostRateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    struct Grant {
        std::string host;
        Clock::time_point at;
    };

    explicit HostRateLimiter(std::chrono::milliseconds default_delay = std::chrono::milliseconds{0},
                             std::map<std::string, std::chrono::milliseconds, std::less<>> per_host = {});
    ~HostRateLimiter();
    HostRateLimiter(const HostRateLimiter&) = delete;
    HostRateLimiter& operator=(const HostRateLimiter&) = delete;

    // Blocks until a request to `host` may be issued.
    void acquire(std::string_view host);

    std::chrono::milliseconds delay_for(std::string_view host) const;
    std::vector<Grant> history() const;

private:
    struct HostState;
    HostState& state_for(std::string_view host);

    std::chrono::milliseconds default_delay_;
    std::map<std::string, std::chrono::milliseconds, std::less<>> per_host_;
    mutable std::mutex mutex_;
    std::map<std::string, std::unique_ptr<HostState>, std::less<>> hosts_;
    std::vector<Grant> history_;
};

} // namespace infoseek::clients
