#include "infoseek/cli/backends.hpp"

#include "infoseek/filter/filter.hpp"

#include <fmt/format.h>

namespace infoseek::cli {

namespace {

std::string_view scenario(Role role)
{
    switch (role) {
    case Role::agent:
        return "agent";
    case Role::summarizer:
        return "summarizer";
    case Role::judge:
        return "judge";
    case Role::synthesis:
        return "synthesis";
    }
    return "agent";
}

} // namespace

Backends::Backends(const PipelineConfig& config) : config_(config)
{
    if (config.backends.world) {
        try {
            world_ = clients::MockWorld::load(*config.backends.world);
        }
        catch (const std::exception& e) {
            throw ConfigError(fmt::format("backends.world: {}", e.what()));
        }
    }
}

Backends::Backends(const PipelineConfig& config, clients::MockWorld world) : config_(config), world_(std::move(world))
{
}

Backends::~Backends() = default;

clients::RetryPolicy Backends::retry() const
{
    clients::RetryPolicy policy;
    policy.max_retries = config_.backends.max_retries;
    policy.initial_backoff = std::chrono::milliseconds(config_.backends.initial_backoff_ms);
    return policy;
}

clients::VisitConfig Backends::visit_config() const
{
    clients::VisitConfig visit;
    visit.content_budget = config_.backends.content_budget;
    visit.summarizer_model = model(Role::summarizer);
    visit.retry = retry();
    return visit;
}

std::string Backends::model(Role role) const
{
    const auto& b = config_.backends;
    switch (role) {
    case Role::agent:
        return b.agent_model;
    case Role::summarizer:
        return b.summarizer_model;
    case Role::judge:
        return b.judge_model;
    case Role::synthesis:
        return b.synthesis_model;
    }
    return b.agent_model;
}

void Backends::set_chat(Role role, std::unique_ptr<clients::ChatBackend> backend)
{
    chats_[static_cast<int>(role)] = std::move(backend);
}

clients::ChatBackend& Backends::chat(Role role)
{
    auto& slot = chats_[static_cast<int>(role)];
    if (slot)
        return *slot;
    if (role == Role::judge && config_.eval.judge == "reference") {
        slot = std::make_unique<filter::OfflineJudge>();
        return *slot;
    }
    if (world_) {
        const auto name = scenario(role);
        if (!world_->has_script(name))
            throw ConfigError(fmt::format("backends.world has no \"{}\" script in scripts.json", name));
        slot = clients::ScriptedChat::from_world(*world_, name);
        return *slot;
    }
    if (!api_transport_)
        api_transport_ = std::make_unique<clients::HttpTransport>(
            clients::HttpTransport::Options{std::chrono::milliseconds(config_.backends.timeout_ms),
                                            config_.synthesis.user_agent, nullptr});
    clients::ChatEndpoint endpoint{require_setting(config_, "backends.llm_base_url"),
                                   require_setting(config_, "backends.llm_api_key"), model(role)};
    slot = std::make_unique<clients::OpenAiChat>(*api_transport_, std::move(endpoint));
    return *slot;
}

clients::SearchBackend& Backends::search()
{
    if (search_)
        return *search_;
    if (world_) {
        search_ = std::make_unique<clients::MockSearch>(*world_);
        return *search_;
    }
    if (!api_transport_)
        api_transport_ = std::make_unique<clients::HttpTransport>(
            clients::HttpTransport::Options{std::chrono::milliseconds(config_.backends.timeout_ms),
                                            config_.synthesis.user_agent, nullptr});
    search_ = std::make_unique<clients::HttpSearch>(
        *api_transport_, clients::SearchEndpoint{require_setting(config_, "backends.search_base_url"),
                                                 require_setting(config_, "backends.search_api_key")});
    return *search_;
}

clients::FetchBackend& Backends::fetch()
{
    if (fetch_)
        return *fetch_;
    if (world_) {
        fetch_ = std::make_unique<clients::MockFetch>(*world_);
        return *fetch_;
    }
    limiter_ = std::make_unique<clients::HostRateLimiter>(std::chrono::milliseconds(config_.backends.per_host_delay_ms));
    web_transport_ = std::make_unique<clients::HttpTransport>(clients::HttpTransport::Options{
        std::chrono::milliseconds(config_.backends.timeout_ms), config_.synthesis.user_agent, nullptr});
    fetch_inner_ = std::make_unique<clients::HttpFetch>(*web_transport_);
    fetch_ = std::make_unique<clients::RateLimitedFetch>(*fetch_inner_, *limiter_);
    return *fetch_;
}

rollout::ToolRegistry make_tools(Backends& backends)
{
    rollout::ToolRegistry tools;
    tools.add(std::make_unique<rollout::SearchTool>(backends.search(), backends.retry()));
    tools.add(std::make_unique<rollout::VisitTool>(backends.fetch(), backends.chat(Role::summarizer),
                                                   backends.visit_config()));
    return tools;
}

} // namespace infoseek::cli
