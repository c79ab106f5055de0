#pragma once

#include "infoseek/clients/search.hpp"
#include "infoseek/clients/visit.hpp"
#include "infoseek/core/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace infoseek::rollout {

class Tool {
public:
    virtual ~Tool() = default;

    virtual core::ToolName name() const = 0;
    // One line for the prompt, including the argument layout.
    virtual std::string description() const = 0;
    // Runs a schema-valid action of this tool's kind. May throw; the
    // registry converts failures into tool-error observations.
    virtual core::Observation run(const core::ActionCall& action) = 0;
};

class SearchTool : public Tool {
public:
    explicit SearchTool(clients::SearchBackend& backend, clients::RetryPolicy retry = {})
        : backend_(backend), retry_(std::move(retry))
    {
    }

    core::ToolName name() const override { return core::ToolName::search; }
    std::string description() const override;
    core::Observation run(const core::ActionCall& action) override;

private:
    clients::SearchBackend& backend_;
    clients::RetryPolicy retry_;
};

class VisitTool : public Tool {
public:
    VisitTool(clients::FetchBackend& fetcher, clients::ChatBackend& summarizer, clients::VisitConfig config = {})
        : fetcher_(fetcher), summarizer_(summarizer), config_(std::move(config))
    {
    }

    core::ToolName name() const override { return core::ToolName::visit; }
    std::string description() const override;
    core::Observation run(const core::ActionCall& action) override;

private:
    clients::FetchBackend& fetcher_;
    clients::ChatBackend& summarizer_;
    clients::VisitConfig config_;
};

// The tools offered to the agent. Safe for concurrent execute() calls as
// long as the tools' backends are.
class ToolRegistry {
public:
    void add(std::unique_ptr<Tool> tool);

    bool has(core::ToolName name) const;
    std::vector<core::ToolName> names() const;
    std::string descriptions() const;
    // "search, visit"
    std::string name_list() const;

    // Runs a validated action. Unregistered tools and tool failures become
    // tool-error observations; throws std::invalid_argument for an answer
    // action or one that fails schema validation.
    core::Observation execute(const core::ActionCall& action) const;

private:
    std::vector<std::unique_ptr<Tool>> tools_;
};

} // namespace infoseek::rollout
