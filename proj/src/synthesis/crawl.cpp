#include "infoseek/synthesis/crawl.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/parallel.hpp"
#include "infoseek/core/prompts.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <map>
#include <optional>
#include <set>

namespace infoseek::synthesis {

bool within_site(const core::Url& url, const core::Url& root, const std::vector<std::string>& allowed_domains)
{
    if (url.registrable_domain() == root.registrable_domain())
        return true;
    const auto& host = url.host();
    for (const auto& domain : allowed_domains) {
        const auto entry = core::to_lower(domain);
        if (host == entry || (host.size() > entry.size() && host.ends_with(entry) &&
                              host[host.size() - entry.size() - 1] == '.'))
            return true;
    }
    return false;
}

namespace {

class RobotsCache {
public:
    RobotsCache(clients::FetchBackend& fetcher, const CrawlOptions& options) : fetcher_(fetcher), options_(options) {}

    bool allowed(const core::Url& url)
    {
        if (!options_.respect_robots)
            return true;
        const auto origin = url.origin();
        auto it = rules_.find(origin);
        if (it == rules_.end()) {
            auto rules = clients::RobotsRules::allow_all();
            if (const auto robots_url = core::Url::parse(origin + "/robots.txt")) {
                try {
                    const auto page =
                        clients::with_retries([&] { return fetcher_.fetch(*robots_url); }, options_.retry);
                    if (page.ok())
                        rules = clients::RobotsRules::parse(page.content, options_.user_agent);
                }
                catch (const clients::TransportError& e) {
                    spdlog::warn("robots.txt unavailable for {}: {}", origin, e.what());
                }
            }
            it = rules_.emplace(origin, std::move(rules)).first;
        }
        return it->second.allowed(url.path());
    }

private:
    clients::FetchBackend& fetcher_;
    const CrawlOptions& options_;
    std::map<std::string, clients::RobotsRules> rules_;
};

struct FetchOutcome {
    std::optional<clients::FetchedPage> page;
    std::string failure;
};

} // namespace

CrawlResult crawl_site(const core::Url& root, int max_depth, int page_budget, clients::FetchBackend& fetcher,
                       const CrawlOptions& options)
{
    if (max_depth < 0)
        throw std::invalid_argument("max_depth must be >= 0");
    if (page_budget < 1)
        throw std::invalid_argument("page_budget must be >= 1");

    CrawlResult result;
    RobotsCache robots(fetcher, options);
    const auto budget = static_cast<std::size_t>(page_budget);
    std::set<std::string> discovered{root.str()};
    std::set<std::string> level{root.str()};

    for (int depth = 0; !level.empty() && result.pages.size() < budget; ++depth) {
        const std::vector<std::string> items(level.begin(), level.end());
        std::set<std::string> next;
        std::size_t pos = 0;
        while (pos < items.size() && result.pages.size() < budget) {
            const auto take = std::min(budget - result.pages.size(), items.size() - pos);
            std::vector<core::Url> urls;
            std::vector<FetchOutcome> outcomes(take);
            for (std::size_t k = 0; k < take; ++k) {
                urls.push_back(*core::Url::parse(items[pos + k]));
                if (!robots.allowed(urls.back()))
                    outcomes[k].failure = "disallowed by robots.txt";
            }
            core::parallel_for(take, options.parallelism, [&](std::size_t k) {
                if (!outcomes[k].failure.empty())
                    return;
                try {
                    auto page = clients::with_retries([&] { return fetcher.fetch(urls[k]); }, options.retry);
                    if (page.ok())
                        outcomes[k].page = std::move(page);
                    else
                        outcomes[k].failure = fmt::format("HTTP {}", page.status);
                }
                catch (const clients::TransportError& e) {
                    outcomes[k].failure = e.what();
                }
            });

            for (std::size_t k = 0; k < take; ++k) {
                const auto& url = urls[k];
                auto& outcome = outcomes[k];
                if (!outcome.page) {
                    if (depth == 0)
                        throw CrawlError(fmt::format("root {} could not be crawled: {}", url.str(), outcome.failure));
                    result.failures.push_back({url.str(), outcome.failure});
                    continue;
                }
                PageNode node{url.str(), std::move(outcome.page->title), std::move(outcome.page->content), {}, depth};
                std::set<std::string> seen;
                for (const auto& link : outcome.page->links) {
                    const auto target = url.resolve(link);
                    if (!target || !within_site(*target, root, options.allowed_domains))
                        continue;
                    if (seen.insert(target->str()).second)
                        node.out_links.push_back(target->str());
                }
                if (depth < max_depth) {
                    for (const auto& link : node.out_links) {
                        if (discovered.insert(link).second)
                            next.insert(link);
                    }
                }
                result.pages.push_back(std::move(node));
            }
            pos += take;
        }
        level = std::move(next);
    }
    return result;
}

namespace {

std::string_view type_guidance(core::QuestionType type)
{
    switch (type) {
    case core::QuestionType::count:
        return "Ask for a number that is obtained by counting items on the pages that meet a stated condition.";
    case core::QuestionType::multi_hop:
        return "Chain facts from at least two different pages: what one page says determines what to look up on "
               "the next.";
    case core::QuestionType::intersection:
        return "Ask for the single item that meets several conditions, each stated on a different page.";
    case core::QuestionType::other:
        return "Ask any fact-seeking question that needs careful reading of the pages.";
    }
    return "";
}

std::string render_pages(const std::vector<const PageNode*>& window, std::size_t excerpt)
{
    std::string out;
    for (std::size_t k = 0; k < window.size(); ++k) {
        const auto& page = *window[k];
        out += fmt::format("[{}] {}\nURL: {}\n{}\n\n", k + 1, page.title, page.url,
                           core::truncate_head_tail(page.content, excerpt));
    }
    return std::string(core::trim(out));
}

std::optional<std::pair<std::string, std::string>> extract_pair(std::string_view reply)
{
    const auto parsed = core::extract_json_object(reply);
    if (!parsed)
        return std::nullopt;
    const auto question = parsed->find("question");
    const auto answer = parsed->find("answer");
    if (question == parsed->end() || answer == parsed->end() || !question->is_string())
        return std::nullopt;
    std::string answer_text;
    if (answer->is_string())
        answer_text = answer->get<std::string>();
    else if (answer->is_number())
        answer_text = answer->dump();
    auto q = std::string(core::trim(question->get<std::string>()));
    auto a = std::string(core::trim(answer_text));
    if (q.empty() || a.empty())
        return std::nullopt;
    return std::pair{std::move(q), std::move(a)};
}

} // namespace

std::vector<core::QAPair> generate_crawl_qa(const std::vector<PageNode>& pages, core::QuestionType question_type,
                                            int count, clients::ChatBackend& llm, const CrawlQaOptions& options)
{
    if (pages.empty())
        throw std::invalid_argument("generate_crawl_qa needs at least one page");
    std::vector<core::QAPair> out;
    std::set<std::string> ids;
    const auto window_size = std::clamp<std::size_t>(options.pages_per_question, 1, pages.size());
    for (int i = 0; i < count; ++i) {
        std::vector<const PageNode*> window;
        for (std::size_t k = 0; k < window_size; ++k)
            window.push_back(&pages[(static_cast<std::size_t>(i) + k) % pages.size()]);

        auto request = clients::user_request(
            core::render_template(core::prompts::crawl_qa.text,
                                  {{"question_type", std::string(core::to_string(question_type))},
                                   {"type_guidance", std::string(type_guidance(question_type))},
                                   {"count_hint", fmt::format("This is question {} of {} for this site.", i + 1, count)},
                                   {"pages", render_pages(window, options.page_excerpt)}}),
            options.sampling);
        request.model = options.model;
        const auto reply = clients::chat(llm, request, options.retry);

        auto pair = extract_pair(reply.content);
        if (!pair) {
            spdlog::debug("crawl QA generation {} dropped: no usable question/answer", i + 1);
            continue;
        }
        core::QAPair qa;
        qa.id = "crawl-" + core::hex_digest(pair->first + '\x1f' + pair->second);
        if (!ids.insert(qa.id).second)
            continue;
        qa.question = std::move(pair->first);
        qa.answer = std::move(pair->second);
        qa.source = core::QaSource::crawl;
        qa.question_type = question_type;
        for (const auto* page : window)
            qa.provenance_urls.push_back(page->url);
        out.push_back(std::move(qa));
    }
    return out;
}

} // namespace infoseek::synthesis
