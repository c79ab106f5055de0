#include "infoseek/clients/http.hpp"

#include "infoseek/core/text.hpp"
#include "infoseek/core/url.hpp"

#include <curl/curl.h>
#include <fmt/format.h>

#include <memory>

namespace infoseek::clients {

namespace {

void ensure_curl_initialized()
{
    static const bool initialized = [] {
        curl_global_init(CURL_GLOBAL_DEFAULT);
        return true;
    }();
    (void)initialized;
}

std::size_t append_body(char* data, std::size_t size, std::size_t count, void* user)
{
    static_cast<std::string*>(user)->append(data, size * count);
    return size * count;
}

struct CurlDeleter {
    void operator()(CURL* handle) const { curl_easy_cleanup(handle); }
};

struct SlistDeleter {
    void operator()(curl_slist* list) const { curl_slist_free_all(list); }
};

std::string trim_slash(std::string_view base)
{
    while (!base.empty() && base.back() == '/')
        base.remove_suffix(1);
    return std::string(base);
}

} // namespace

HttpTransport::HttpTransport() : HttpTransport(Options{}) {}

HttpTransport::HttpTransport(Options options) : options_(std::move(options))
{
    ensure_curl_initialized();
}

HttpResponse HttpTransport::get(const std::string& url, const std::map<std::string, std::string>& headers) const
{
    return perform("GET", url, nullptr, headers);
}

HttpResponse HttpTransport::post_json(const std::string& url, const std::string& body,
                                      const std::map<std::string, std::string>& headers) const
{
    auto merged = headers;
    merged.emplace("Content-Type", "application/json");
    return perform("POST", url, &body, merged);
}

HttpResponse HttpTransport::perform(const std::string& method, const std::string& url, const std::string* body,
                                    const std::map<std::string, std::string>& headers) const
{
    if (options_.limiter) {
        if (const auto parsed = core::Url::parse(url))
            options_.limiter->acquire(parsed->host());
    }

    std::unique_ptr<CURL, CurlDeleter> handle(curl_easy_init());
    if (!handle)
        throw TransientError("curl_easy_init failed");

    std::unique_ptr<curl_slist, SlistDeleter> header_list;
    for (const auto& [name, value] : headers) {
        const auto line = fmt::format("{}: {}", name, value);
        auto* appended = curl_slist_append(header_list.get(), line.c_str());
        if (!appended)
            throw TransientError("curl_slist_append failed");
        header_list.release();
        header_list.reset(appended);
    }

    HttpResponse response;
    CURL* h = handle.get();
    curl_easy_setopt(h, CURLOPT_URL, url.c_str());
    curl_easy_setopt(h, CURLOPT_USERAGENT, options_.user_agent.c_str());
    curl_easy_setopt(h, CURLOPT_TIMEOUT_MS, static_cast<long>(options_.timeout.count()));
    curl_easy_setopt(h, CURLOPT_NOSIGNAL, 1L);
    curl_easy_setopt(h, CURLOPT_ACCEPT_ENCODING, "");
    curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, &append_body);
    curl_easy_setopt(h, CURLOPT_WRITEDATA, &response.body);
    if (header_list)
        curl_easy_setopt(h, CURLOPT_HTTPHEADER, header_list.get());
    if (method == "POST") {
        curl_easy_setopt(h, CURLOPT_POST, 1L);
        curl_easy_setopt(h, CURLOPT_POSTFIELDS, body->data());
        curl_easy_setopt(h, CURLOPT_POSTFIELDSIZE_LARGE, static_cast<curl_off_t>(body->size()));
    }
    else {
        curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, 1L);
        curl_easy_setopt(h, CURLOPT_MAXREDIRS, 5L);
    }

    const auto code = curl_easy_perform(h);
    if (code != CURLE_OK)
        throw TransientError(fmt::format("{} {}: {}", method, url, curl_easy_strerror(code)));

    curl_easy_getinfo(h, CURLINFO_RESPONSE_CODE, &response.status);
    char* content_type = nullptr;
    if (curl_easy_getinfo(h, CURLINFO_CONTENT_TYPE, &content_type) == CURLE_OK && content_type)
        response.content_type = content_type;
    char* effective = nullptr;
    if (curl_easy_getinfo(h, CURLINFO_EFFECTIVE_URL, &effective) == CURLE_OK && effective)
        response.effective_url = effective;
    return response;
}

void raise_for_status(const HttpResponse& response, std::string_view what)
{
    if (response.status >= 200 && response.status < 300)
        return;
    const auto excerpt = response.body.substr(0, 200);
    const auto message = fmt::format("{}: HTTP {} {}", what, response.status, excerpt);
    if (response.status == 408 || response.status == 429 || response.status >= 500)
        throw TransientError(message);
    throw BackendError(message);
}

nlohmann::json OpenAiChat::request_body(const ChatRequest& request, const ChatEndpoint& endpoint)
{
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& message : request.messages)
        messages.push_back({{"role", message.role}, {"content", message.content}});
    nlohmann::json body{
        {"model", request.model.empty() ? endpoint.model : request.model},
        {"messages", std::move(messages)},
        {"temperature", request.sampling.temperature},
        {"top_p", request.sampling.top_p},
    };
    // Not part of the reference API; servers such as vLLM accept it.
    if (request.sampling.repetition_penalty != 1.0)
        body["repetition_penalty"] = request.sampling.repetition_penalty;
    if (request.tools)
        body["tools"] = *request.tools;
    return body;
}

ChatResponse OpenAiChat::parse_response(std::string_view body)
{
    const auto parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw BackendError("chat response is not a JSON object");
    const auto choices = parsed.find("choices");
    if (choices == parsed.end() || !choices->is_array() || choices->empty())
        throw BackendError("chat response has no choices");
    const auto& choice = choices->front();
    if (!choice.contains("message") || !choice.at("message").is_object())
        throw BackendError("chat response choice has no message");
    const auto& message = choice.at("message");
    ChatResponse response;
    if (message.contains("content") && message.at("content").is_string())
        response.content = message.at("content").get<std::string>();
    if (message.contains("reasoning_content") && message.at("reasoning_content").is_string())
        response.reasoning_content = message.at("reasoning_content").get<std::string>();
    if (choice.contains("finish_reason") && choice.at("finish_reason").is_string())
        response.finish_reason = choice.at("finish_reason").get<std::string>();
    return response;
}

ChatResponse OpenAiChat::complete(const ChatRequest& request)
{
    std::map<std::string, std::string> headers;
    if (!endpoint_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
    const auto response = transport_.post_json(trim_slash(endpoint_.base_url) + "/chat/completions",
                                               request_body(request, endpoint_).dump(), headers);
    raise_for_status(response, "chat completion");
    return parse_response(response.body);
}

core::SearchObservation HttpSearch::search(std::string_view query, std::optional<int> filter_year)
{
    nlohmann::json body{{"q", query}, {"num", core::kMaxSearchResults}};
    if (filter_year)
        body["tbs"] = fmt::format("cdr:1,cd_min:1/1/{0},cd_max:12/31/{0}", *filter_year);
    std::map<std::string, std::string> headers;
    if (!endpoint_.api_key.empty())
        headers.emplace("X-API-KEY", endpoint_.api_key);
    const auto response = transport_.post_json(trim_slash(endpoint_.base_url) + "/search", body.dump(), headers);
    raise_for_status(response, "search");

    const auto parsed = nlohmann::json::parse(response.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object())
        throw BackendError("search response is not a JSON object");
    core::SearchObservation observation;
    const auto organic = parsed.find("organic");
    if (organic == parsed.end() || !organic->is_array())
        return observation;
    for (const auto& item : *organic) {
        if (observation.results.size() == core::kMaxSearchResults)
            break;
        if (!item.is_object() || !item.contains("link") || !item.at("link").is_string())
            continue;
        observation.results.push_back({item.value("title", std::string{}), item.value("snippet", std::string{}),
                                       item.at("link").get<std::string>()});
    }
    return observation;
}

FetchedPage HttpFetch::fetch(const core::Url& url)
{
    const auto response = transport_.get(url.str());
    if (response.status == 408 || response.status == 429 || response.status >= 500)
        throw TransientError(fmt::format("GET {}: HTTP {}", url.str(), response.status));

    FetchedPage page;
    page.status = static_cast<int>(response.status);
    page.url = response.effective_url.empty() ? url.str() : response.effective_url;
    if (!page.ok())
        return page;
    const auto base = core::Url::parse(page.url).value_or(url);
    const auto type = core::to_lower(response.content_type);
    if (type.empty() || core::contains(type, "html")) {
        auto doc = extract_html(response.body, base);
        page.title = std::move(doc.title);
        page.content = std::move(doc.text);
        page.links = std::move(doc.links);
    }
    else {
        page.content = response.body;
    }
    return page;
}

} // namespace infoseek::clients
