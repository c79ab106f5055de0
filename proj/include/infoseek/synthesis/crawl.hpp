#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/fetch.hpp"
#include "infoseek/core/types.hpp"
#include "infoseek/core/url.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace infoseek::synthesis {

struct PageNode {
    std::string url;
    std::string title;
    std::string content;
    // Absolute links that pass the site boundary, in document order.
    std::vector<std::string> out_links;
    int depth = 0;

    bool operator==(const PageNode&) const = default;
};

struct CrawlOptions {
    // Registrable domains or hosts that may be followed in addition to the
    // root's registrable domain.
    std::vector<std::string> allowed_domains;
    bool respect_robots = true;
    std::string user_agent = "infoseek";
    int parallelism = 1;
    clients::RetryPolicy retry;
};

struct CrawlFailure {
    std::string url;
    std::string reason;

    bool operator==(const CrawlFailure&) const = default;
};

struct CrawlResult {
    std::vector<PageNode> pages;
    std::vector<CrawlFailure> failures;
};

// The root page could not be fetched (or robots.txt forbids it).
class CrawlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Breadth-first crawl. Each depth level is visited in lexicographic URL
// order; URLs are deduplicated on discovery; at most page_budget pages are
// returned. Non-root fetch failures are recorded in `failures`.
CrawlResult crawl_site(const core::Url& root, int max_depth, int page_budget, clients::FetchBackend& fetcher,
                       const CrawlOptions& options = {});

// True when `url` is on the root's registrable domain or an allowed domain.
bool within_site(const core::Url& url, const core::Url& root, const std::vector<std::string>& allowed_domains);

struct CrawlQaOptions {
    // Pages shown to the generator per question (rotating window).
    std::size_t pages_per_question = 3;
    // Per-page character budget inside the prompt.
    std::size_t page_excerpt = 4000;
    std::string model;
    core::SamplingParams sampling{0.7, 0.95, 1.0, 1};
    clients::RetryPolicy retry;
};

// One generation per requested pair over a rotating window of pages. Pairs
// whose reply has no JSON object with non-empty question and answer are
// dropped, as are duplicates. Backend failures propagate.
std::vector<core::QAPair> generate_crawl_qa(const std::vector<PageNode>& pages, core::QuestionType question_type,
                                            int count, clients::ChatBackend& llm, const CrawlQaOptions& options = {});

} // namespace infoseek::synthesis
