#include "infoseek/clients/rate_limiter.hpp"

#include <thread>

namespace infoseek::clients {

struct HostRateLimiter::HostState {
    std::mutex mutex;
    Clock::time_point next = Clock::time_point::min();
};

HostRateLimiter::HostRateLimiter(std::chrono::milliseconds default_delay,
                                 std::map<std::string, std::chrono::milliseconds, std::less<>> per_host)
    : default_delay_(default_delay), per_host_(std::move(per_host))
{
}

HostRateLimiter::~HostRateLimiter() = default;

std::chrono::milliseconds HostRateLimiter::delay_for(std::string_view host) const
{
    const auto it = per_host_.find(host);
    return it == per_host_.end() ? default_delay_ : it->second;
}

HostRateLimiter::HostState& HostRateLimiter::state_for(std::string_view host)
{
    std::lock_guard lock(mutex_);
    auto it = hosts_.find(host);
    if (it == hosts_.end())
        it = hosts_.emplace(std::string(host), std::make_unique<HostState>()).first;
    return *it->second;
}

void HostRateLimiter::acquire(std::string_view host)
{
    auto& state = state_for(host);
    // Holding the host lock across the sleep serializes callers, so the
    // spacing holds between actual grant times.
    std::lock_guard host_lock(state.mutex);
    if (Clock::now() < state.next)
        std::this_thread::sleep_until(state.next);
    const auto granted = Clock::now();
    state.next = granted + delay_for(host);
    std::lock_guard lock(mutex_);
    history_.push_back(Grant{std::string(host), granted});
}

std::vector<HostRateLimiter::Grant> HostRateLimiter::history() const
{
    std::lock_guard lock(mutex_);
    return history_;
}

} // namespace infoseek::clients
