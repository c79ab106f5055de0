#include "infoseek/clients/visit.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/prompts.hpp"
#include "infoseek/core/text.hpp"
#include "infoseek/core/url.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace infoseek::clients {

std::optional<core::VisitObservation> parse_summary_reply(std::string_view reply)
{
    const auto parsed = core::extract_json_object(reply);
    if (!parsed)
        return std::nullopt;
    const auto evidence = parsed->find("evidence");
    const auto summary = parsed->find("summary");
    if (evidence == parsed->end() || summary == parsed->end() || !evidence->is_string() || !summary->is_string())
        return std::nullopt;
    return core::VisitObservation{evidence->get<std::string>(), summary->get<std::string>()};
}

core::Observation visit(std::string_view url, std::string_view goal, FetchBackend& fetcher, ChatBackend& summarizer,
                        const VisitConfig& config)
{
    if (core::trim(goal).empty())
        throw std::invalid_argument("visit goal is empty");
    const auto parsed = core::Url::parse(url);
    if (!parsed)
        throw std::invalid_argument(fmt::format("visit url '{}' is not absolute", url));

    FetchedPage page;
    try {
        page = with_retries([&] { return fetcher.fetch(*parsed); }, config.retry);
    }
    catch (const TransportError& e) {
        return core::tool_error_observation(fmt::format("fetch failed for {}: {}", parsed->str(), e.what()));
    }
    if (!page.ok())
        return core::tool_error_observation(fmt::format("HTTP {} for {}", page.status, parsed->str()));
    if (core::trim(page.content).empty())
        return core::tool_error_observation(fmt::format("no readable content at {}", parsed->str()));

    ChatRequest request = user_request(core::render_template(core::prompts::summarizer.text,
                                                             {{"goal", std::string(goal)},
                                                              {"url", parsed->str()},
                                                              {"content", core::truncate_head_tail(
                                                                              page.content, config.content_budget)}}),
                                       config.sampling);
    request.model = config.summarizer_model;

    for (int attempt = 0; attempt < 2; ++attempt) {
        ChatResponse reply;
        try {
            reply = chat(summarizer, request, config.retry);
        }
        catch (const TransportError& e) {
            return core::tool_error_observation(fmt::format("summarizer failed: {}", e.what()));
        }
        if (auto summary = parse_summary_reply(reply.content))
            return *summary;
    }
    return core::tool_error_observation("summarizer reply was not valid JSON");
}

} // namespace infoseek::clients
