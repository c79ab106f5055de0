#include "infoseek/rollout/tools.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <stdexcept>

namespace infoseek::rollout {

std::string SearchTool::description() const
{
    return R"(search: web search returning the top-10 titles and snippets. Arguments: {"query": string, "filter_year": optional integer year the results must come from})";
}

core::Observation SearchTool::run(const core::ActionCall& action)
{
    const auto& args = std::get<core::SearchArgs>(action.args);
    try {
        return clients::search(backend_, args.query, args.filter_year, retry_);
    }
    catch (const clients::TransportError& e) {
        return core::tool_error_observation(fmt::format("search failed: {}", e.what()));
    }
}

std::string VisitTool::description() const
{
    return R"(visit: open a web page and return the evidence and a summary relevant to a goal. Arguments: {"goal": string, "url_link": absolute URL string})";
}

core::Observation VisitTool::run(const core::ActionCall& action)
{
    const auto& args = std::get<core::VisitArgs>(action.args);
    return clients::visit(args.url_link, args.goal, fetcher_, summarizer_, config_);
}

void ToolRegistry::add(std::unique_ptr<Tool> tool)
{
    if (tool->name() == core::ToolName::answer)
        throw std::invalid_argument("answer is not a tool");
    if (has(tool->name()))
        throw std::invalid_argument(fmt::format("tool {} registered twice", core::to_string(tool->name())));
    tools_.push_back(std::move(tool));
    std::sort(tools_.begin(), tools_.end(), [](const auto& a, const auto& b) { return a->name() < b->name(); });
}

bool ToolRegistry::has(core::ToolName name) const
{
    return std::any_of(tools_.begin(), tools_.end(), [&](const auto& tool) { return tool->name() == name; });
}

std::vector<core::ToolName> ToolRegistry::names() const
{
    std::vector<core::ToolName> out;
    for (const auto& tool : tools_)
        out.push_back(tool->name());
    return out;
}

std::string ToolRegistry::descriptions() const
{
    std::string out;
    for (const auto& tool : tools_) {
        if (!out.empty())
            out += '\n';
        out += "- " + tool->description();
    }
    return out;
}

std::string ToolRegistry::name_list() const
{
    std::string out;
    for (const auto& tool : tools_) {
        if (!out.empty())
            out += ", ";
        out += core::to_string(tool->name());
    }
    return out;
}

core::Observation ToolRegistry::execute(const core::ActionCall& action) const
{
    if (action.is_answer())
        throw std::invalid_argument("cannot execute the answer action");
    if (auto issue = core::validate(action))
        throw std::invalid_argument(fmt::format("invalid {} action: {}", core::to_string(action.name()), *issue));
    const auto it = std::find_if(tools_.begin(), tools_.end(),
                                 [&](const auto& tool) { return tool->name() == action.name(); });
    if (it == tools_.end())
        return core::tool_error_observation(fmt::format("tool '{}' is not available", core::to_string(action.name())));
    try {
        return (*it)->run(action);
    }
    catch (const std::exception& e) {
        return core::tool_error_observation(e.what());
    }
}

} // namespace infoseek::rollout
