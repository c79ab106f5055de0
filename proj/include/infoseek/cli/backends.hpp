#pragma once

#include "infoseek/cli/config.hpp"
#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/fetch.hpp"
#include "infoseek/clients/http.hpp"
#include "infoseek/clients/mock.hpp"
#include "infoseek/clients/rate_limiter.hpp"
#include "infoseek/clients/search.hpp"
#include "infoseek/clients/visit.hpp"
#include "infoseek/rollout/tools.hpp"

#include <memory>
#include <optional>

namespace infoseek::cli {

enum class Role { agent, summarizer, judge, synthesis };

// Every backend a stage may need, owned in one place so tools and stages
// can hold plain references. Backends are created on first use, so a
// missing API key only matters to stages that actually call that service.
class Backends {
public:
    // With config.backends.world set, chat roles replay the world's scripts
    // ("agent", "summarizer", "judge", "synthesis") and search/fetch are
    // served by MockSearch/MockFetch.
    explicit Backends(const PipelineConfig& config);
    // Takes an in-memory world (the offline demo).
    Backends(const PipelineConfig& config, clients::MockWorld world);
    ~Backends();

    clients::ChatBackend& chat(Role role);
    clients::SearchBackend& search();
    clients::FetchBackend& fetch();

    // Replaces a role (tests and the offline demo).
    void set_chat(Role role, std::unique_ptr<clients::ChatBackend> backend);

    clients::RetryPolicy retry() const;
    clients::VisitConfig visit_config() const;
    std::string model(Role role) const;

    bool offline() const noexcept { return world_.has_value(); }
    const clients::MockWorld* world() const noexcept { return world_ ? &*world_ : nullptr; }

private:
    const PipelineConfig& config_;
    std::optional<clients::MockWorld> world_;
    std::unique_ptr<clients::HostRateLimiter> limiter_;
    std::unique_ptr<clients::HttpTransport> api_transport_;
    std::unique_ptr<clients::HttpTransport> web_transport_;
    std::unique_ptr<clients::ChatBackend> chats_[4];
    std::unique_ptr<clients::SearchBackend> search_;
    std::unique_ptr<clients::FetchBackend> fetch_inner_;
    std::unique_ptr<clients::FetchBackend> fetch_;
};

// search + visit, wired to `backends`.
rollout::ToolRegistry make_tools(Backends& backends);

} // namespace infoseek::cli
