#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/fetch.hpp"
#include "infoseek/core/types.hpp"

#include <cstddef>
#include <string>
#include <string_view>

namespace infoseek::clients {

struct VisitConfig {
    // Raw page text handed to the summarizer, head+tail retained.
    std::size_t content_budget = 24000;
    std::string summarizer_model;
    core::SamplingParams sampling{0.0, 1.0, 1.0, 1};
    RetryPolicy retry;
};

// Fetches `url` and asks the summarizer for {evidence, summary} relevant to
// `goal`. Fetch failures and a summarizer reply that is unparseable twice
// become tool-error observations. Throws std::invalid_argument when the
// goal is empty or the URL is not absolute.
core::Observation visit(std::string_view url, std::string_view goal, FetchBackend& fetcher, ChatBackend& summarizer,
                        const VisitConfig& config = {});

// Parses a summarizer reply: a JSON object with string fields evidence and
// summary, optionally fenced or surrounded by prose.
std::optional<core::VisitObservation> parse_summary_reply(std::string_view reply);

} // namespace infoseek::clients
