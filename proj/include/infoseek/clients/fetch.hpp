#pragma once

#include "infoseek/clients/rate_limiter.hpp"
#include "infoseek/core/url.hpp"

#include <optional>
#include <string>
#include <vector>

namespace infoseek::clients {

struct FetchedPage {
    int status = 0;
    std::string url;
    std::string title;
    // Extracted main text (markup removed).
    std::string content;
    // Absolute out-links in document order.
    std::vector<std::string> links;
    std::optional<int> year;

    bool ok() const noexcept { return status >= 200 && status < 300; }
};

class FetchBackend {
public:
    virtual ~FetchBackend() = default;

    // Non-2xx statuses are returned, not thrown; network failures throw
    // TransientError.
    virtual FetchedPage fetch(const core::Url& url) = 0;
};

// Applies per-host spacing before delegating.
class RateLimitedFetch : public FetchBackend {
public:
    RateLimitedFetch(FetchBackend& inner, HostRateLimiter& limiter) : inner_(inner), limiter_(limiter) {}

    FetchedPage fetch(const core::Url& url) override;

private:
    FetchBackend& inner_;
    HostRateLimiter& limiter_;
};

struct HtmlDocument {
    std::string title;
    std::string text;
    std::vector<std::string> links;
};

// Tag-stripping extraction: drops script/style/noscript, decodes common
// entities, resolves href targets against `base`.
HtmlDocument extract_html(std::string_view html, const core::Url& base);

// robots.txt rules for one user agent (falls back to the `*` group).
class RobotsRules {
public:
    static RobotsRules parse(std::string_view robots_txt, std::string_view user_agent);
    static RobotsRules allow_all() { return {}; }

    bool allowed(std::string_view path) const;

private:
    std::vector<std::string> allow_;
    std::vector<std::string> disallow_;
};

} // namespace infoseek::clients
