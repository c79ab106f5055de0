#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/fetch.hpp"
#include "infoseek/clients/rate_limiter.hpp"
#include "infoseek/clients/search.hpp"

#include <chrono>
#include <map>
#include <string>

namespace infoseek::clients {

struct HttpResponse {
    long status = 0;
    std::string body;
    std::string content_type;
    std::string effective_url;
};

// Blocking libcurl transport. When a limiter is attached every request is
// spaced per host before it is sent. Connection-level failures throw
// TransientError; HTTP statuses are returned.
class HttpTransport {
public:
    struct Options {
        std::chrono::milliseconds timeout{60000};
        std::string user_agent = "infoseek/0.1 (+research crawler)";
        HostRateLimiter* limiter = nullptr;
    };

    HttpTransport();
    explicit HttpTransport(Options options);

    HttpResponse get(const std::string& url, const std::map<std::string, std::string>& headers = {}) const;
    HttpResponse post_json(const std::string& url, const std::string& body,
                           const std::map<std::string, std::string>& headers = {}) const;

    const Options& options() const noexcept { return options_; }

private:
    HttpResponse perform(const std::string& method, const std::string& url, const std::string* body,
                         const std::map<std::string, std::string>& headers) const;

    Options options_;
};

// Maps an HTTP status to the retry taxonomy: 408/429/5xx are transient,
// other non-2xx statuses are backend errors.
void raise_for_status(const HttpResponse& response, std::string_view what);

struct ChatEndpoint {
    std::string base_url;
    std::string api_key;
    std::string model;
};

// Chat-completions JSON API: POST {base_url}/chat/completions.
class OpenAiChat : public ChatBackend {
public:
    OpenAiChat(const HttpTransport& transport, ChatEndpoint endpoint)
        : transport_(transport), endpoint_(std::move(endpoint))
    {
    }

    ChatResponse complete(const ChatRequest& request) override;

    static nlohmann::json request_body(const ChatRequest& request, const ChatEndpoint& endpoint);
    static ChatResponse parse_response(std::string_view body);

private:
    const HttpTransport& transport_;
    ChatEndpoint endpoint_;
};

struct SearchEndpoint {
    std::string base_url;
    std::string api_key;
};

// Serper-style web search: POST {base_url}/search with {"q", "num", "tbs"},
// response "organic": [{"title", "snippet", "link"}].
class HttpSearch : public SearchBackend {
public:
    HttpSearch(const HttpTransport& transport, SearchEndpoint endpoint)
        : transport_(transport), endpoint_(std::move(endpoint))
    {
    }

    core::SearchObservation search(std::string_view query, std::optional<int> filter_year) override;

private:
    const HttpTransport& transport_;
    SearchEndpoint endpoint_;
};

// GET + HTML text extraction (no JavaScript rendering).
class HttpFetch : public FetchBackend {
public:
    explicit HttpFetch(const HttpTransport& transport) : transport_(transport) {}

    FetchedPage fetch(const core::Url& url) override;

private:
    const HttpTransport& transport_;
};

} // namespace infoseek::clients
